#include <cmath>
#include <ostream>

#include "common.hpp"
#include "grwlim/experiments.hpp"

namespace grwlim::experiments {

namespace {

using C = Comparison;

class Suite {
public:
  explicit Suite(const VerifyOptions& opt) : opt_(opt) {}

  void add(std::string id, std::string label, double analytic, double measured, double tolerance, C cmp = C::equal) {
    records_.push_back({std::move(id), std::move(label), analytic, measured, opt_.tolerance.value_or(tolerance), cmp});
  }
  double mc(double std_error) const { return std::max(opt_.sigmas * std_error, 1e-12); }
  StreamKey key(std::string_view name) const { return detail::key(opt_.seed, name); }
  RandomStream stream(std::string_view name) const { return RandomStream(key(name), 0); }
  const VerifyOptions& opt() const { return opt_; }
  std::vector<VerificationRecord> take() { return std::move(records_); }

private:
  VerifyOptions opt_;
  std::vector<VerificationRecord> records_;
};

std::string at(const char* name, double v) { return std::string(name) + "=" + format_number(v); }

const auto kStd2 = OrthonormalBasis<double>::standard(2);

void check_re1(Suite& s) {
  const auto psi = StateVector<double>::uniform(2);
  const YesNoExperiment<double> e1(detector_effect(psi));
  for (const double p : {0.2, 0.5, 0.8}) {
    s.add("RE1", "formula " + at("p", p), 1 - p / 2, reliability_pure(psi, e1, kStd2, p), kAnalyticTolerance);
    const auto r = reliability_monte_carlo(psi, e1, CollapseChannel<double>(kStd2, p), s.opt().trials,
                                           s.key("RE1").child(static_cast<std::uint64_t>(p * 1000)), s.opt().workers);
    s.add("RE1", "mc " + at("p", p), 1 - p / 2, r.mean, s.mc(r.std_error));
  }
}

void check_p1_p2(Suite& s) {
  const auto psi = StateVector<double>::uniform(2);
  auto rng = s.stream("P1P2");
  std::vector<Effect<double>> effects;
  for (int i = 0; i < 1000; ++i) effects.push_back(random_effect<double>(2, rng));
  for (const double p : {0.3, 0.5, 2.0 / 3.0, 0.7, 0.8, 0.9}) {
    double worst = 0;
    for (const auto& e : effects) worst = std::max(worst, reliability_pure(psi, YesNoExperiment<double>(e), kStd2, p));
    s.add(p <= 2.0 / 3.0 ? "P1" : "P2", "max over 1000 effects " + at("p", p), reliability_bound<double>(2, p), worst,
          1e-10, C::at_most);
  }
}

void check_p3(Suite& s) {
  const Eigen::Index n = 3;
  auto rng = s.stream("P3");
  const auto basis = OrthonormalBasis<double>::standard(n);
  const auto mixed = DensityMatrix<double>::maximally_mixed(n);
  double worst_half = 0, worst_bound = -1;
  for (int i = 0; i < 10; ++i) {
    const YesNoExperiment<double> e(random_effect<double>(n, rng));
    const auto mc = haar_average_reliability_mc(e, basis, 0.3, s.opt().trials,
                                                s.key("P3").child(static_cast<std::uint64_t>(i)), s.opt().workers);
    s.add("P3", "haar mc effect " + std::to_string(i) + " p=0.3", haar_average_reliability(e, 0.3), mc.mean,
          s.mc(mc.std_error));
    worst_half = std::max(worst_half, std::abs(reliability_mixed(mixed, e, basis, 0.5) - 0.5));
    worst_bound = std::max(worst_bound, reliability_mixed(mixed, e, basis, 0.3));
  }
  s.add("P3", "I/n at p=0.5 (worst |R-1/2|)", 0.0, worst_half, 1e-12);
  s.add("P3", "I/n at p=0.3 below blind", 0.7, worst_bound, 1e-12, C::at_most);
}

void check_p4(Suite& s) {
  const Eigen::Index n = 3;
  const double p = 0.3;
  auto rng = s.stream("P4");
  const auto basis = OrthonormalBasis<double>::standard(n);
  const auto mixed = DensityMatrix<double>::maximally_mixed(n);
  double worst = p;
  for (int i = 0; i < 100; ++i) {
    const auto povm = random_povm<double>(n, 3, rng);
    for (std::size_t z = 0; z < povm.size(); ++z) {
      const double post = bayes_posterior_mixed(mixed, povm, basis, p, povm.label(z));
      if (std::abs(post - p) > std::abs(worst - p)) worst = post;
    }
  }
  s.add("P4", "100 random POVMs, all outcomes", p, worst, 1e-12);
}

DensityMatrix<double> random_density(Eigen::Index n, RandomStream& rng) {
  const auto povm = random_povm<double>(n, 2, rng);
  const auto& e = povm.effect(0).matrix();
  return DensityMatrix<double>(HermitianOperator<double>(CMatrix<double>(e / e.trace())));
}

void check_helstrom(Suite& s) {
  auto rng = s.stream("P5");
  double excess = -1;
  for (int inst = 0; inst < 20; ++inst) {
    const Eigen::Index n = 2 + inst % 3;
    const auto r1 = random_density(n, rng), r2 = random_density(n, rng);
    const double p = 0.2 + 0.03 * inst;
    const auto h = helstrom(r1, r2, p);
    for (int i = 0; i < 1000; ++i) {
      excess = std::max(excess, reliability_two_hypothesis(r1, r2, random_effect<double>(n, rng), p) - h.max_reliability);
    }
    excess = std::max(excess, reliability_two_hypothesis(r1, r2, h.effect, p) - h.max_reliability);
  }
  s.add("P5-Helstrom", "random effects minus optimum, 20 instances", 0.0, excess, 1e-10, C::at_most);
  const auto pair = rho_pair(StateVector<double>::uniform(2), kStd2);
  for (const double p : default_p_grid()) {
    s.add("P5-Helstrom", "collapse pair n=2 " + at("p", p), reliability_bound<double>(2, p),
          helstrom(pair.rho1, pair.rho2, p).max_reliability, kAnalyticTolerance);
  }
}

void check_success_sets(Suite& s) {
  const auto worst_row = [](const SuccessScan<double>& scan, double level, double sigmas) {
    const auto* w = &scan.rows.front();
    for (const auto& r : scan.rows) {
      if (r.estimate - level - sigmas * r.std_error > w->estimate - level - sigmas * w->std_error) w = &r;
    }
    return *w;
  };
  const auto scan = [&](Eigen::Index n, double p, FamilyKind kind, Eigen::Index rank, const char* tag) {
    ScanOptions o;
    o.n = n;
    o.p = p;
    o.family = kind;
    o.rank = rank;
    o.family_size = 100;
    o.samples = 10000;
    o.seed = detail::key(s.opt().seed, tag).tag;
    o.workers = s.opt().workers;
    o.sigmas = s.opt().sigmas;
    return run_scan(o).scan;
  };
  for (const Eigen::Index n : {3, 4}) {
    const auto r = worst_row(scan(n, 0.1, FamilyKind::mixed, -1, "P6"), 0.5, s.opt().sigmas);
    s.add("P6", "n=" + std::to_string(n) + " p=0.1 worst of 100", 0.5, r.estimate, s.mc(r.std_error), C::at_most);
  }
  for (const double p : {0.2, 0.4, 0.6, 0.8}) {
    const auto r = worst_row(scan(2, p, FamilyKind::mixed, -1, "dim2"), 0.5, s.opt().sigmas);
    s.add("dim2", "n=2 " + at("p", p) + " worst of 100", 0.5, r.estimate, s.mc(r.std_error), C::at_most);
  }
  const struct {
    Eigen::Index n;
    double p;
    FamilyKind kind;
    Eigen::Index rank;
    const char* label;
  } cases[] = {{3, 0.4, FamilyKind::random, 2, "n=3 p=0.4 rank-2 effects"},
               {3, 0.4, FamilyKind::detector, -1, "n=3 p=0.4 detectors"},
               {4, 0.3, FamilyKind::mixed, -1, "n=4 p=0.3 mixed"}};
  for (const auto& c : cases) {
    const auto r = worst_row(scan(c.n, c.p, c.kind, c.rank, c.label), kConjecturedSuccessBound, s.opt().sigmas);
    s.add("conjecture", c.label, kConjecturedSuccessBound, r.estimate, s.mc(r.std_error), C::at_most);
  }
}

void check_pa1(Suite& s) {
  const Eigen::Index n = 3;
  auto rng = s.stream("PA1");
  const auto twins = twin_ensembles<double>(n);
  double worst = 0, rho_gap = max_abs(
      (ensemble_density(twins.mu1).matrix() - ensemble_density(twins.mu2).matrix()).eval());
  for (int i = 0; i < 100; ++i) {
    const auto povm = random_povm<double>(n, 4, rng);
    for (std::size_t z = 0; z < povm.size(); ++z) {
      double q1 = 0, q2 = 0;
      for (const auto& e : twins.mu1.entries()) q1 += e.weight * born_probability(e.state, povm.effect(z));
      for (const auto& e : twins.mu2.entries()) q2 += e.weight * born_probability(e.state, povm.effect(z));
      worst = std::max(worst, std::abs(q1 - q2));
    }
  }
  s.add("PA1", "density matrices of the twins", 0.0, rho_gap, 1e-12);
  s.add("PA1", "100 random POVMs, all outcomes", 0.0, worst, 1e-12);
}

void check_eopt(Suite& s) {
  auto rng = s.stream("Eopt");
  double worst = 0;
  for (const Eigen::Index n : {2, 3, 4, 8}) {
    const auto basis = OrthonormalBasis<double>::standard(n);
    const double branch = static_cast<double>(n) / (n + 1);
    for (int i = 0; i < 100; ++i) {
      const auto psi = haar_state<double>(n, rng);
      const auto pair = rho_pair(psi, basis);
      for (int k = 1; k <= 9; ++k) {
        const double p = k / 10.0;
        if (std::abs(p - branch) < 1e-6) continue;
        const double formula = optimal_collapse_detector(psi, basis, p).reliability;
        worst = std::max(worst, std::abs(formula - helstrom(pair.rho1, pair.rho2, p).max_reliability));
      }
    }
  }
  s.add("Eopt", "closed form vs spectral, 100 Haar states per n in {2,3,4,8}", 0.0, worst, kAnalyticTolerance);
  double sat = 0;
  for (Eigen::Index n = 2; n <= 8; ++n) {
    const auto psi = StateVector<double>::uniform(n);
    for (int k = 1; k <= 9; ++k) {
      const double p = k / 10.0;
      if (p > static_cast<double>(n) / (n + 1)) continue;
      sat = std::max(sat, std::abs(optimal_collapse_detector(psi, p).reliability - (1 - p / n)));
    }
  }
  s.add("Eopt", "uniform state saturates 1-p/n, n<=8", 0.0, sat, 1e-12);
}

void check_bayes(Suite& s) {
  const auto psi = StateVector<double>::uniform(2);
  const YesNoExperiment<double> e1(detector_effect(psi));
  double worst_no = 0, worst_yes = 0;
  for (int k = 1; k <= 99; ++k) {
    const double p = k / 100.0;
    worst_no = std::max(worst_no, std::abs(bayes_posterior(psi, e1, kStd2, p, false) - p / (2 - p)));
    worst_yes = std::max(worst_yes, std::abs(bayes_posterior(psi, e1, kStd2, p, true) - 1));
  }
  s.add("Bayes", "answer no: |posterior - p/(2-p)|, p in (0,1)", 0.0, worst_no, 1e-12);
  s.add("Bayes", "answer yes: |posterior - 1|, p in (0,1)", 0.0, worst_yes, 1e-12);
}

void check_rcx(Suite& s) {
  for (const double p : {0.5, 0.9, 0.99}) {
    const auto demo = make_mass_demo("two-branch", p);
    const mass::Cell cell{8, 8};
    const double ratio = mass::ghirardi_ratio(demo.psi, cell, demo.masses);
    s.add("RCx", "two-branch exact " + at("p", p), std::sqrt((1 - p) / p), ratio, 1e-12);

    const auto spec = mass::CoarseGrainSpec::cell(8);
    const mass::ConfigurationSampler sample(demo.psi);
    const auto& grid = demo.psi.grid();
    stats::Moments m;
    RandomStream rng(s.key("RCx").child(static_cast<std::uint64_t>(p * 1000)), 0);
    for (std::size_t t = 0; t < s.opt().trials; ++t) {
      m.add(mass::estimator_field(sample(rng), demo.masses, spec, grid)(8));
    }
    const auto est = stats::std_over_mean(m);
    s.add("RCx", "Monte Carlo std/mean " + at("p", p), ratio, est.value, s.mc(est.std_error));
  }
}

void check_mass_density(Suite& s) {
  auto rng = s.stream("mdef");
  const grw::Grid grid(2, 16, 8.0);
  std::normal_distribution<double> normal;
  Eigen::VectorXcd a(static_cast<Eigen::Index>(grid.size()));
  for (Eigen::Index q = 0; q < a.size(); ++q) a(q) = {normal(rng), normal(rng)};
  const grw::GridWaveFunction psi(grid, a);
  const std::vector<double> masses{1.0, 2.5};
  const auto m1 = grw::mass_density(psi, masses);
  const auto m2 = grw::mass_density_operator_form(psi, masses);
  s.add("mdef", "marginal vs operator form, N=2 random state", 0.0, (m1.values - m2.values).cwiseAbs().maxCoeff(), 1e-12);
  double worst = 0;
  for (const auto& spec : {mass::CoarseGrainSpec::cell(2.0), mass::CoarseGrainSpec::cell(4.0, 1.0),
                           mass::CoarseGrainSpec::gaussian(0.5), mass::CoarseGrainSpec::gaussian(1.5)}) {
    worst = std::max(worst, std::abs(mass::coarse_grain(m1, spec).total() - 3.5) / 3.5);
  }
  s.add("mdef", "coarse-grained total mass (relative error)", 0.0, worst, 1e-9);

  const auto spec = mass::CoarseGrainSpec::cell(2.0);
  const auto target = mass::coarse_grain(m1, spec);
  const mass::ConfigurationSampler sample(psi);
  std::vector<stats::Moments> acc(grid.points());
  RandomStream draw(s.key("unbiased"), 0);
  for (std::size_t t = 0; t < s.opt().trials; ++t) {
    const auto f = mass::estimator_field(sample(draw), masses, spec, grid);
    for (std::size_t x = 0; x < grid.points(); x += 2) acc[x].add(f(static_cast<Eigen::Index>(x)));
  }
  std::size_t worst_x = 0;
  double worst_z = -1;
  for (std::size_t x = 0; x < grid.points(); x += 2) {
    const double se = std::max(acc[x].std_error_of_mean(), 1e-300);
    const double z = std::abs(acc[x].mean() - target.values(static_cast<Eigen::Index>(x))) / se;
    if (z > worst_z) {
      worst_z = z;
      worst_x = x;
    }
  }
  s.add("mdef", "estimator mean vs cell-averaged density, worst cell", target.values(static_cast<Eigen::Index>(worst_x)),
        acc[worst_x].mean(), s.mc(acc[worst_x].std_error_of_mean()));
}

void check_grw(Suite& s) {
  const auto g = grw_statistics(s.opt().seed, 10000, 10000, s.opt().workers);
  s.add("GRW", "flash counts ~ Poisson(1): chi-square p-value", kChiSquareSignificance, g.flash_counts.p_value, 0.0,
        C::at_least);
  s.add("GRW", "particle labels uniform: chi-square p-value", kChiSquareSignificance, g.labels.p_value, 0.0,
        C::at_least);
  s.add("GRW", "norm error after hits", 0.0, g.max_norm_error, 1e-12, C::at_most);
  s.add("GRW", "branch frequency vs |c|^2", g.branch_probability, g.branch_frequency, s.mc(g.branch_std_error));
  s.add("GRW", "weight left in the other packet", 0.0, g.max_minority_weight, 1e-3, C::at_most);
}

}  // namespace

bool VerificationRecord::pass() const {
  switch (comparison) {
    case Comparison::equal: return std::abs(analytic - measured) <= tolerance;
    case Comparison::at_most: return measured - analytic <= tolerance;
    case Comparison::at_least: return analytic - measured <= tolerance;
  }
  return false;
}

bool all_pass(const std::vector<VerificationRecord>& records) {
  for (const auto& r : records) {
    if (!r.pass()) return false;
  }
  return true;
}

nlohmann::json to_json(const VerifyOptions& opt) {
  nlohmann::json j = {{"command", "verify"}, {"seed", opt.seed}, {"trials", opt.trials}, {"sigmas", opt.sigmas}};
  if (opt.tolerance) j["tolerance"] = *opt.tolerance;
  return j;
}

std::vector<VerificationRecord> run_verification(const VerifyOptions& opt) {
  if (opt.trials < 1) throw ConfigError("trials", "must be >= 1");
  if (!(opt.sigmas > 0)) throw ConfigError("sigmas", "must be positive");
  if (opt.tolerance && !(*opt.tolerance >= 0)) throw ConfigError("tolerance", "must be >= 0");
  Suite s(opt);
  check_re1(s);
  check_p1_p2(s);
  check_p3(s);
  check_p4(s);
  check_helstrom(s);
  check_success_sets(s);
  check_pa1(s);
  check_eopt(s);
  check_bayes(s);
  check_rcx(s);
  check_mass_density(s);
  check_grw(s);
  return s.take();
}

void write_verification_csv(std::ostream& out, const VerifyOptions& opt, const std::vector<VerificationRecord>& records) {
  out << header_comment(opt.seed, config_hash(to_json(opt))) << '\n';
  out << "id,case,analytic,measured,tolerance,comparison,verdict\n";
  for (const auto& r : records) {
    const char* cmp = r.comparison == Comparison::equal ? "equal" : r.comparison == Comparison::at_most ? "at_most" : "at_least";
    out << r.id << ",\"" << r.label << "\"," << format_number(r.analytic) << ',' << format_number(r.measured) << ','
        << format_number(r.tolerance) << ',' << cmp << ',' << (r.pass() ? "pass" : "FAIL") << '\n';
  }
}

}  // namespace grwlim::experiments
