#include <ostream>

#include "common.hpp"
#include "grwlim/experiments.hpp"

namespace grwlim::experiments {

nlohmann::json to_json(const Figure1Options& opt) {
  return {{"command", "figure1"}, {"n", 2}, {"p_grid", opt.p_grid}, {"trials", opt.trials}, {"seed", opt.seed}};
}

std::vector<Figure1Row> figure1(const Figure1Options& opt) {
  if (opt.trials < 1) throw ConfigError("trials", "must be >= 1");
  for (std::size_t k = 0; k < opt.p_grid.size(); ++k) {
    if (!(opt.p_grid[k] >= 0 && opt.p_grid[k] <= 1)) throw ConfigError("p_grid[" + std::to_string(k) + "]", "must lie in [0, 1]");
  }
  const auto basis = OrthonormalBasis<double>::standard(2);
  const auto psi = StateVector<double>::uniform(2);
  const YesNoExperiment<double> e1(detector_effect(psi));
  const auto pair = rho_pair(psi, basis);
  const StreamKey root = detail::key(opt.seed, "figure1");

  std::vector<Figure1Row> rows;
  for (std::size_t k = 0; k < opt.p_grid.size(); ++k) {
    const double p = opt.p_grid[k];
    const CollapseChannel<double> channel(basis, p);
    const StreamKey key = root.child(k);
    const auto e1_mc = reliability_monte_carlo(psi, e1, channel, opt.trials, key.child(0), opt.workers);
    const YesNoExperiment<double> best(helstrom(pair.rho1, pair.rho2, p).effect);
    const auto best_mc = reliability_monte_carlo(psi, best, channel, opt.trials, key.child(1), opt.workers);
    rows.push_back({p, std::max(p, 1 - p), reliability_pure(psi, e1, basis, p), e1_mc.mean, e1_mc.std_error,
                    reliability_bound<double>(2, p), best_mc.mean, best_mc.std_error});
  }
  return rows;
}

void write_figure1_csv(std::ostream& out, const Figure1Options& opt, const std::vector<Figure1Row>& rows) {
  out << header_comment(opt.seed, config_hash(to_json(opt))) << '\n';
  out << "p,blind,e1_analytic,e1_mc,e1_stderr,optimal_analytic,optimal_mc,optimal_stderr\n";
  for (const auto& r : rows) {
    out << format_number(r.p) << ',' << format_number(r.blind) << ',' << format_number(r.e1_analytic) << ','
        << format_number(r.e1_mc) << ',' << format_number(r.e1_std_error) << ',' << format_number(r.optimal_analytic)
        << ',' << format_number(r.optimal_mc) << ',' << format_number(r.optimal_std_error) << '\n';
  }
}

}  // namespace grwlim::experiments
