#include "escqe/harness.hpp"

#include <fmt/format.h>
#include <spdlog/spdlog.h>

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <mutex>
#include <nlohmann/json.hpp>
#include <random>
#include <sstream>
#include <thread>

#include "escqe/error.hpp"
#include "escqe/residuals.hpp"
#include "fock.hpp"

namespace escqe::harness {

namespace fs = std::filesystem;
using nlohmann::json;

// ----------------------------------------------------------------- problem --

namespace {

fci::SectorBasis sector_for(int r, int n_electrons, int ms2) {
  const int na = (n_electrons + ms2) / 2, nb = n_electrons - na;
  if (na < 0 || nb < 0 || na > r || nb > r || (n_electrons + ms2) % 2 != 0) {
    throw DomainError(fmt::format("no sector with {} electrons and 2Sz={} in {} orbitals", n_electrons, ms2, r));
  }
  return fci::enumerate_sector(r, na, nb);
}

}  // namespace

MolecularProblem build_problem(const molint::Geometry& geometry, int n_electrons, std::string_view basis) {
  geometry.validate();
  MolecularProblem p;
  p.geometry = geometry;
  p.n_electrons = n_electrons < 0 ? geometry.nuclear_charge() - geometry.charge : n_electrons;
  const molint::IntegralSet ints = molint::build_integrals(geometry, basis);
  molint::ScfOptions opt;
  opt.symmetry = molint::ao_symmetry(geometry);
  p.scf = molint::rhf(ints, p.n_electrons, opt);
  p.hamiltonian = molint::to_spin_orbitals(ints, p.scf.coefficients);
  p.pauli = secondq::assemble_hamiltonian(p.hamiltonian);
  p.op = sim::QubitOperator(p.pauli);
  for (int g : p.scf.irreps) p.mo_irreps.push_back(static_cast<d2h::Irrep>(g));
  p.sector = sector_for(p.n_spatial(), p.n_electrons, p.n_electrons % 2);
  return p;
}

MolecularProblem problem_from_fcidump(const molint::FcidumpData& data) {
  MolecularProblem p;
  p.n_electrons = data.nelec;
  p.hamiltonian = molint::to_spin_orbitals(data.integrals);
  p.scf.coefficients = Eigen::MatrixXd::Identity(data.norb, data.norb);
  p.pauli = secondq::assemble_hamiltonian(p.hamiltonian);
  p.op = sim::QubitOperator(p.pauli);
  p.sector = sector_for(data.norb, data.nelec, data.ms2);
  return p;
}

fci::SymmetryLabel label_state(const MolecularProblem& problem, const sim::StateVector& state) {
  return fci::classify(problem.sector, problem.sector.restrict(state.amplitudes()), problem.mo_irreps, false);
}

// ------------------------------------------------------------------ config --

namespace {

std::string trim(std::string_view s) {
  size_t a = s.find_first_not_of(" \t\r");
  if (a == std::string_view::npos) return {};
  size_t b = s.find_last_not_of(" \t\r");
  return std::string(s.substr(a, b - a + 1));
}

double to_double(const std::string& v, int line) {
  try {
    size_t used = 0;
    double d = std::stod(v, &used);
    if (used != v.size()) throw std::invalid_argument(v);
    return d;
  } catch (const std::exception&) {
    throw ParseError(fmt::format("expected a number, got '{}'", v), line);
  }
}

long long to_int(const std::string& v, int line) {
  double d = to_double(v, line);
  if (d != std::floor(d)) throw ParseError(fmt::format("expected an integer, got '{}'", v), line);
  return static_cast<long long>(d);
}

bool to_bool(const std::string& v, int line) {
  if (v == "true" || v == "yes" || v == "1") return true;
  if (v == "false" || v == "no" || v == "0") return false;
  throw ParseError(fmt::format("expected true/false, got '{}'", v), line);
}

}  // namespace

RunConfig RunConfig::parse(std::string_view text) {
  RunConfig c;
  std::istringstream in{std::string(text)};
  std::string raw;
  int line = 0;
  while (std::getline(in, raw)) {
    ++line;
    std::string s = trim(raw.substr(0, raw.find('#')));
    if (s.empty()) continue;
    size_t eq = s.find('=');
    if (eq == std::string::npos) throw ParseError("expected 'key = value'", line);
    const std::string key = trim(s.substr(0, eq));
    const std::string val = trim(s.substr(eq + 1));
    try {
      if (key == "name") c.name = val;
      else if (key == "geometry") c.geometry = val;
      else if (key == "fcidump") c.fcidump = val;
      else if (key == "basis") c.basis = val;
      else if (key == "electrons") c.electrons = static_cast<int>(to_int(val, line));
      else if (key == "k") c.k = static_cast<int>(to_int(val, line));
      else if (key == "guess") c.guess = refstates::parse_pool_kind(val);
      else if (key == "strategy") c.strategy = solver::ConstraintStrategy::parse(val);
      else if (key == "method") {
        if (val == "bfgs") c.optimizer.method = solver::Method::BFGS;
        else if (val == "lbfgs") c.optimizer.method = solver::Method::LBFGS;
        else throw ParseError(fmt::format("unknown method '{}'", val), line);
      } else if (key == "lbfgs_history") c.optimizer.lbfgs_history = static_cast<int>(to_int(val, line));
      else if (key == "residual_threshold") c.optimizer.residual_threshold = to_double(val, line);
      else if (key == "violation_threshold") c.optimizer.violation_threshold = to_double(val, line);
      else if (key == "max_iterations") c.optimizer.max_iterations = static_cast<int>(to_int(val, line));
      else if (key == "reset_memory") c.optimizer.reset_memory_each_step = to_bool(val, line);
      else if (key == "seed") c.seed = static_cast<std::uint64_t>(to_int(val, line));
      else if (key == "scan") {
        c.scan.clear();
        std::stringstream ss(val);
        std::string tok;
        while (std::getline(ss, tok, ',')) {
          double d = to_double(trim(tok), line);
          if (!(d > 0)) throw ParseError("scan values must be positive", line);
          c.scan.push_back(d);
        }
      } else if (key == "fixed_side") c.fixed_side = to_double(val, line);
      else if (key == "prescan_threshold") c.prescan.residual_threshold = to_double(val, line);
      else if (key == "prescan_iterations") c.prescan.max_iterations = static_cast<int>(to_int(val, line));
      else if (key == "prescan_factor") c.prescan.factor = static_cast<int>(to_int(val, line));
      else if (key == "warm_start") c.prescan.warm_start = to_bool(val, line);
      else if (key == "run_plain") c.run_plain = to_bool(val, line);
      else if (key == "variance_threshold") c.variance_threshold = to_double(val, line);
      else throw ParseError(fmt::format("unknown key '{}'", key), line);
    } catch (const ParseError& e) {
      if (e.line() > 0) throw;
      throw ParseError(e.what(), line);
    } catch (const DomainError& e) {
      throw ParseError(e.what(), line);
    }
  }
  c.optimizer.validate();
  return c;
}

RunConfig RunConfig::load(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw ParseError("cannot open config " + path, 0);
  std::stringstream ss;
  ss << f.rdbuf();
  return parse(ss.str());
}

molint::Geometry RunConfig::make_geometry(const std::string& base_dir) const {
  std::istringstream in(geometry);
  std::string kind;
  in >> kind;
  if (kind == "rectangle") {
    double x = 0, y = 0;
    if (!(in >> x >> y)) throw ParseError("geometry: rectangle needs two side lengths", 0);
    return molint::Geometry::rectangle(x, y);
  }
  if (kind == "diatomic") {
    double r = 0;
    if (!(in >> r)) throw ParseError("geometry: diatomic needs a bond length", 0);
    return molint::Geometry::diatomic(r);
  }
  if (kind == "xyz") {
    std::string path;
    in >> path;
    fs::path p(path);
    if (p.is_relative()) p = fs::path(base_dir) / p;
    std::ifstream f(p);
    if (!f) throw ParseError("cannot open geometry " + p.string(), 0);
    std::stringstream ss;
    ss << f.rdbuf();
    return molint::Geometry::from_xyz(ss.str());
  }
  throw ParseError(fmt::format("unknown geometry kind '{}'", kind), 0);
}

namespace {

MolecularProblem problem_for(const RunConfig& c, const std::string& base_dir) {
  if (!c.fcidump.empty()) {
    fs::path p(c.fcidump);
    if (p.is_relative()) p = fs::path(base_dir) / p;
    return problem_from_fcidump(molint::read_fcidump(p.string()));
  }
  return build_problem(c.make_geometry(base_dir), c.electrons, c.basis);
}

}  // namespace

// ----------------------------------------------------------------- metrics --

double k_matched_error_mh(std::vector<double> m, std::vector<double> ref) {
  if (m.empty()) return 0.0;
  if (ref.size() < m.size()) throw DomainError("fewer reference energies than method energies");
  std::sort(m.begin(), m.end());
  std::sort(ref.begin(), ref.end());
  double s = 0.0;
  for (size_t i = 0; i < m.size(); ++i) s += std::abs(m[i] - ref[i]);
  return kMilliHartree * s / static_cast<double>(m.size());
}

double nearest_unique_error_mh(std::vector<double> m, std::vector<double> ref) {
  if (m.empty()) return 0.0;
  if (ref.size() < m.size()) throw DomainError("fewer reference energies than method energies");
  std::sort(m.begin(), m.end());
  std::vector<bool> used(ref.size(), false);
  double s = 0.0;
  for (double e : m) {
    size_t best = ref.size();
    for (size_t j = 0; j < ref.size(); ++j) {
      if (used[j]) continue;
      if (best == ref.size() || std::abs(ref[j] - e) < std::abs(ref[best] - e)) best = j;
    }
    used[best] = true;
    s += std::abs(ref[best] - e);
  }
  return kMilliHartree * s / static_cast<double>(m.size());
}

SpectrumSummary summarize(const std::vector<solver::StateResult>& results, const Eigen::VectorXd& fci,
                          double thr) {
  SpectrumSummary s;
  s.states = static_cast<int>(results.size());
  if (results.empty()) return s;
  std::vector<double> lv, it, energies;
  for (const auto& r : results) {
    s.converged += r.record.converged;
    s.variance_ok += r.record.variance < thr;
    lv.push_back(std::log10(std::max(r.record.variance, 1e-16)));
    it.push_back(r.record.n_iterations);
    energies.push_back(r.record.energy);
  }
  auto stats = [](const std::vector<double>& v, double& mean, double& sd) {
    mean = 0.0;
    for (double x : v) mean += x;
    mean /= static_cast<double>(v.size());
    sd = 0.0;
    for (double x : v) sd += (x - mean) * (x - mean);
    sd = std::sqrt(sd / static_cast<double>(v.size()));
  };
  stats(lv, s.mean_log10_variance, s.std_log10_variance);
  stats(it, s.mean_iterations, s.std_iterations);
  std::vector<double> ref(fci.data(), fci.data() + fci.size());
  s.k_matched_mh = k_matched_error_mh(energies, ref);
  s.nearest_unique_mh = nearest_unique_error_mh(energies, ref);
  return s;
}

// ---------------------------------------------------------------- spectrum --

SpectrumOutcome run_spectrum_experiment(const MolecularProblem& problem, const RunConfig& config) {
  SpectrumOutcome out;
  const double sz = 0.5 * (problem.sector.n_alpha() - problem.sector.n_beta());
  auto pool = refstates::guess_pool(problem.op, problem.n_spatial(), problem.n_electrons, sz, config.guess);
  auto starts = solver::start_points(pool, problem.n_qubits());
  out.results = solver::run_spectrum(problem.op, starts, config.k, config.strategy, config.optimizer);
  for (auto& r : out.results) r.record.label = label_state(problem, r.state).str();
  out.fci = fci::classify_spectrum(problem.hamiltonian, problem.sector, problem.mo_irreps);
  out.summary = summarize(out.results, out.fci.energies, config.variance_threshold);
  return out;
}

namespace {

std::ofstream open_out(const fs::path& p) {
  std::ofstream f(p, std::ios::binary);
  if (!f) throw Error("cannot write " + p.string());
  return f;
}

std::string label_spin(const fci::SymmetryLabel& l) { return l.spin ? fmt::format("{:g}", *l.spin) : "mixed"; }
std::string label_irrep(const fci::SymmetryLabel& l) {
  return l.irrep ? std::string(d2h::label(*l.irrep)) : std::string("NA");
}

json summary_json(const SpectrumSummary& s) {
  return {{"states", s.states},
          {"converged", s.converged},
          {"variance_ok", s.variance_ok},
          {"mean_log10_variance", s.mean_log10_variance},
          {"std_log10_variance", s.std_log10_variance},
          {"mean_iterations", s.mean_iterations},
          {"std_iterations", s.std_iterations},
          {"k_matched_mH", s.k_matched_mh},
          {"nearest_unique_mH", s.nearest_unique_mh}};
}

}  // namespace

int cmd_spectrum(const RunConfig& config, const std::string& out_dir, bool fci_only, const std::string& base_dir) {
  fs::create_directories(out_dir);
  const MolecularProblem problem = problem_for(config, base_dir);
  if (fci_only) {
    auto spec = fci::classify_spectrum(problem.hamiltonian, problem.sector, problem.mo_irreps);
    open_out(fs::path(out_dir) / "fci.csv") << fci::spectrum_csv(spec);
    return 0;
  }
  SpectrumOutcome o = run_spectrum_experiment(problem, config);
  {
    auto f = open_out(fs::path(out_dir) / "fci.csv");
    f << fci::spectrum_csv(o.fci);
  }
  {
    auto f = open_out(fs::path(out_dir) / "spectrum.csv");
    f << "k,start,E_CQE,E_FCI,abs_dE_mH,variance,iterations,converged,S,irrep\n";
    for (size_t i = 0; i < o.results.size(); ++i) {
      const auto& r = o.results[i].record;
      const double ef = o.fci.energies(static_cast<Eigen::Index>(i));
      const auto l = label_state(problem, o.results[i].state);
      f << fmt::format("{},{},{:.10f},{:.10f},{:.6f},{:.3e},{},{},{},{}\n", i, r.start, r.energy, ef,
                       kMilliHartree * std::abs(r.energy - ef), r.variance, r.n_iterations, r.converged ? 1 : 0,
                       label_spin(l), label_irrep(l));
    }
  }
  {
    auto f = open_out(fs::path(out_dir) / "trace.jsonl");
    for (const auto& res : o.results) {
      for (const auto& it : res.record.iterations) {
        json j = {{"state", res.record.run_index}, {"start", res.record.start},   {"iteration", it.iteration},
                  {"energy", it.energy},           {"expectation", it.expectation}, {"objective", it.objective},
                  {"residual", it.residual_norm},   {"violations", it.violations}, {"step", it.step},
                  {"gadgets", it.gadgets},          {"fallback", it.fallback}};
        f << j.dump() << '\n';
      }
    }
  }
  json sj = summary_json(o.summary);
  sj["name"] = config.name;
  sj["strategy"] = config.strategy.str();
  sj["guess"] = std::string(refstates::pool_kind_name(config.guess));
  sj["k"] = config.k;
  open_out(fs::path(out_dir) / "summary.json") << sj.dump(2) << '\n';
  spdlog::info("{}: {}/{} converged, {} with variance < {:g}, mean log10 var {:.2f}, mean iterations {:.1f}",
               config.name, o.summary.converged, o.summary.states, o.summary.variance_ok, config.variance_threshold,
               o.summary.mean_log10_variance, o.summary.mean_iterations);
  return 0;
}

// ------------------------------------------------------------ dissociation --

DissociationPoint run_dissociation_point(const RunConfig& config, double d) {
  DissociationPoint pt;
  pt.d = d;
  const MolecularProblem problem = build_problem(molint::Geometry::rectangle(d, config.fixed_side), config.electrons);
  const auto eig = fci::fci_solve(fci::sector_hamiltonian(problem.hamiltonian, problem.sector));
  pt.fci.assign(eig.values.data(), eig.values.data() + eig.values.size());
  const double sz = 0.5 * (problem.sector.n_alpha() - problem.sector.n_beta());
  auto pool = refstates::guess_pool(problem.op, problem.n_spatial(), problem.n_electrons, sz, config.guess);
  auto starts = solver::start_points(pool, problem.n_qubits());
  auto energies = [](const std::vector<solver::StateResult>& rs) {
    std::vector<double> e;
    for (const auto& r : rs) e.push_back(r.record.energy);
    return e;
  };
  if (config.run_plain) {
    pt.plain = energies(solver::run_spectrum(problem.op, starts, config.k, config.strategy, config.optimizer));
    pt.plain_k_mh = k_matched_error_mh(pt.plain, pt.fci);
    pt.plain_nearest_mh = nearest_unique_error_mh(pt.plain, pt.fci);
  }
  auto plus_starts = solver::cqe_plus(problem.op, starts, config.k, config.strategy, config.prescan, config.optimizer);
  pt.plus = energies(solver::run_spectrum(problem.op, plus_starts, config.k, config.strategy, config.optimizer));
  pt.plus_k_mh = k_matched_error_mh(pt.plus, pt.fci);
  pt.plus_nearest_mh = nearest_unique_error_mh(pt.plus, pt.fci);
  return pt;
}

int worker_count() {
  const char* env = std::getenv("ESCQE_WORKERS");
  if (!env) return 1;
  try {
    return std::max(1, std::stoi(env));
  } catch (const std::exception&) {
    spdlog::warn("ignoring invalid ESCQE_WORKERS='{}'", env);
    return 1;
  }
}

int cmd_dissociation(const RunConfig& config, const std::string& out_dir, const std::string&) {
  if (config.scan.empty()) throw DomainError("dissociation requires a non-empty scan list");
  fs::create_directories(out_dir);
  std::vector<DissociationPoint> points(config.scan.size());
  std::vector<std::string> errors(config.scan.size());
  std::mutex mu;
  size_t next = 0;
  auto worker = [&] {
    while (true) {
      size_t i;
      {
        std::lock_guard lock(mu);
        if (next >= config.scan.size()) return;
        i = next++;
      }
      try {
        points[i] = run_dissociation_point(config, config.scan[i]);
        spdlog::info("d={:.3f}: CQE {:.4f}/{:.4f} mH, CQE+ {:.4f}/{:.4f} mH", config.scan[i], points[i].plain_k_mh,
                     points[i].plain_nearest_mh, points[i].plus_k_mh, points[i].plus_nearest_mh);
      } catch (const std::exception& e) {
        errors[i] = e.what();
      }
    }
  };
  const int nw = std::min<int>(worker_count(), static_cast<int>(config.scan.size()));
  std::vector<std::thread> pool;
  for (int w = 1; w < nw; ++w) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();

  auto table = open_out(fs::path(out_dir) / "dissociation.csv");
  auto states = open_out(fs::path(out_dir) / "energies.csv");
  table << "d,cqe_k_matched_mH,cqe_nearest_unique_mH,cqeplus_k_matched_mH,cqeplus_nearest_unique_mH\n";
  states << "d,method,index,energy,fci\n";
  int rc = 0;
  for (size_t i = 0; i < points.size(); ++i) {
    if (!errors[i].empty()) {
      spdlog::error("d={}: {}", config.scan[i], errors[i]);
      rc = 1;
      continue;
    }
    const auto& p = points[i];
    table << fmt::format("{:.4f},{:.6f},{:.6f},{:.6f},{:.6f}\n", p.d, p.plain_k_mh, p.plain_nearest_mh, p.plus_k_mh,
                         p.plus_nearest_mh);
    auto emit = [&](const char* name, const std::vector<double>& e) {
      for (size_t j = 0; j < e.size(); ++j) {
        states << fmt::format("{:.4f},{},{},{:.10f},{:.10f}\n", p.d, name, j, e[j], p.fci[j]);
      }
    };
    if (config.run_plain) emit("cqe", p.plain);
    emit("cqe+", p.plus);
  }
  return rc;
}

// ---------------------------------------------------------------- validate --

namespace {

Eigen::MatrixXcd fock_hamiltonian(const molint::SpinOrbitalHamiltonian& h) {
  const int n = h.n_spin_orbitals;
  const std::uint64_t dim = std::uint64_t{1} << n;
  Eigen::MatrixXcd m = Eigen::MatrixXcd::Identity(dim, dim) * h.enuc;
  for (std::uint64_t b = 0; b < dim; ++b) {
    for (int p = 0; p < n; ++p)
      for (int q = 0; q < n; ++q) {
        std::uint64_t d = b;
        int s = 1;
        if (h.k1(p, q) == 0.0 || !detail::annihilate(d, q, s) || !detail::create(d, p, s)) continue;
        m(d, b) += s * h.k1(p, q);
      }
    for (int p = 0; p < n; ++p)
      for (int r = p + 1; r < n; ++r)
        for (int q = 0; q < n; ++q)
          for (int t = q + 1; t < n; ++t) {
            const double v = h.v2(p, r, q, t);
            std::uint64_t d = b;
            int s = 1;
            if (v == 0.0 || !detail::annihilate(d, q, s) || !detail::annihilate(d, t, s) ||
                !detail::create(d, r, s) || !detail::create(d, p, s))
              continue;
            m(d, b) += s * v;
          }
  }
  return m;
}

sim::StateVector random_sector_state(const MolecularProblem& p, std::mt19937_64& rng) {
  std::normal_distribution<double> g;
  Eigen::VectorXcd c(p.sector.dim());
  for (Eigen::Index i = 0; i < c.size(); ++i) c(i) = {g(rng), g(rng)};
  c.normalize();
  return sim::StateVector::from_amplitudes(p.n_qubits(), p.sector.embed(c));
}

Check make_check(std::string module, std::string name, bool ok, std::string detail) {
  return {std::move(module), std::move(name), ok, std::move(detail)};
}

}  // namespace

std::vector<Check> validation_checks(const RunConfig& config, const std::string& base_dir) {
  std::vector<Check> out;
  MolecularProblem problem;
  try {
    problem = problem_for(config, base_dir);
    out.push_back(make_check("molint", "problem setup", true, fmt::format("{} qubits", problem.n_qubits())));
  } catch (const std::exception& e) {
    out.push_back(make_check("molint", "problem setup", false, e.what()));
    return out;
  }
  std::mt19937_64 rng(config.seed);
  const int n = problem.n_qubits();

  // FCIDUMP round trip of the MO integrals.
  try {
    molint::FcidumpData d;
    d.norb = problem.n_spatial();
    d.nelec = problem.n_electrons;
    d.ms2 = problem.sector.n_alpha() - problem.sector.n_beta();
    d.integrals.hcore = problem.hamiltonian.k1(Eigen::seq(0, Eigen::last, 2), Eigen::seq(0, Eigen::last, 2));
    d.integrals.overlap = Eigen::MatrixXd::Identity(d.norb, d.norb);
    d.integrals.eri = molint::Eri(d.norb);
    for (int p = 0; p < d.norb; ++p)
      for (int q = 0; q < d.norb; ++q)
        for (int r = 0; r < d.norb; ++r)
          for (int s = 0; s < d.norb; ++s)  // (pq|rs) = <pr|qs> for equal spins in opposite-spin blocks
            d.integrals.eri(p, q, r, s) = problem.hamiltonian.v2(2 * p, 2 * r + 1, 2 * q, 2 * s + 1);
    d.integrals.enuc = problem.hamiltonian.enuc;
    auto back = molint::parse_fcidump(molint::format_fcidump(d));
    double diff = (back.integrals.hcore - d.integrals.hcore).cwiseAbs().maxCoeff();
    for (size_t i = 0; i < d.integrals.eri.data().size(); ++i)
      diff = std::max(diff, std::abs(back.integrals.eri.data()[i] - d.integrals.eri.data()[i]));
    out.push_back(make_check("molint", "FCIDUMP round trip", diff < 1e-12, fmt::format("max diff {:.1e}", diff)));
  } catch (const std::exception& e) {
    out.push_back(make_check("molint", "FCIDUMP round trip", false, e.what()));
  }

  // Jordan-Wigner Hamiltonian against direct Fock-space action.
  if (n <= 10) {
    double diff = (problem.pauli.to_dense() - fock_hamiltonian(problem.hamiltonian)).cwiseAbs().maxCoeff();
    out.push_back(make_check("secondq", "qubit Hamiltonian vs Fock oracle", diff < 1e-10, fmt::format("max diff {:.1e}", diff)));
  }

  const auto& tangent = solver::TangentSpace(n);
  std::normal_distribution<double> gauss;
  auto random_theta = [&](double scale) {
    Eigen::VectorXd t(tangent.size());
    for (Eigen::Index i = 0; i < t.size(); ++i) t(i) = scale * gauss(rng);
    return t;
  };

  // Ancilla-controlled overlap and TDM against direct evaluation.
  {
    sim::StateVector a = random_sector_state(problem, rng), b = random_sector_state(problem, rng);
    auto sk = tangent.gadgets(random_theta(0.05)), sj = tangent.gadgets(random_theta(0.05));
    auto pair = sim::controlled_pair_circuit(sk, a, sj, b);
    auto ka = a, jb = b;
    sim::apply_sequence(ka, sk);
    sim::apply_sequence(jb, sj);
    double diff = std::abs(sim::ancilla_overlap(pair) - sim::inner_product(jb, ka));
    auto tdm = sim::transition_2rdm(jb, ka);
    secondq::PairIndex pairs(n);
    for (int t = 0; t < 5; ++t) {
      int P = static_cast<int>(rng() % pairs.size()), Q = static_cast<int>(rng() % pairs.size());
      auto [i, k] = pairs[P];
      auto [j, l] = pairs[Q];
      diff = std::max(diff, std::abs(sim::controlled_pair_tdm(pair, i, k, l, j) - tdm.matrix()(P, Q)));
    }
    out.push_back(make_check("pauli_sim", "ancilla overlap/TDM vs direct", diff < 1e-12, fmt::format("max diff {:.1e}", diff)));
  }

  auto spectrum = fci::classify_spectrum(problem.hamiltonian, problem.sector, problem.mo_irreps);
  residuals::ProjectionSet lower;
  for (int a = 0; a < std::min(2, problem.sector.dim() - 1); ++a) {
    lower.add(sim::StateVector::from_amplitudes(n, problem.sector.embed(Eigen::VectorXd(spectrum.vectors.col(a)))),
              spectrum.energies(a));
  }

  // Gradient identity of the projected energy.
  {
    sim::StateVector psi = random_sector_state(problem, rng);
    auto terms = residuals::evaluate_terms(psi, problem.op, lower);
    double e = residuals::projected_energy(terms, lower);
    auto g = tangent.gradient(residuals::acpse_residual(terms, lower, e).values.matrix());
    double worst = 0.0;
    for (int t = 0; t < 5; ++t) {
      Eigen::VectorXd dir = random_theta(1.0);
      const double eps = 1e-5;
      auto shifted = [&](double s) {
        auto st = psi;
        sim::apply_sequence(st, tangent.gadgets(s * dir));
        return residuals::projected_energy(st, problem.op, lower);
      };
      double fd = (shifted(eps) - shifted(-eps)) / (2 * eps);
      double an = g.dot(dir);
      worst = std::max(worst, std::abs(fd - an) / std::max(1e-12, std::abs(an)));
    }
    out.push_back(make_check("residuals", "ACPSE gradient vs finite difference", worst < 1e-5,
                             fmt::format("max rel err {:.1e}", worst)));
  }

  // CSF spin eigenvalues.
  if (problem.sector.n_alpha() == problem.sector.n_beta()) {
    auto pool = refstates::guess_pool(problem.op, problem.n_spatial(), problem.n_electrons, 0.0, refstates::PoolKind::CSF);
    const auto s2 = sim::QubitOperator(secondq::s2_operator(n));
    double worst = 0.0;
    for (const auto& g : pool) {
      const auto& c = std::get<refstates::CsfSpec>(g.spec);
      double s = c.spin();
      worst = std::max(worst, std::abs(sim::expectation(refstates::prepare(g.spec, n), s2).real() - s * (s + 1)));
    }
    out.push_back(make_check("refstates", "CSF S^2 eigenvalues", worst < 1e-10, fmt::format("max err {:.1e}", worst)));
  }

  if (problem.mo_irreps.empty()) {
    out.push_back(make_check("fci_oracle", "symmetry table", true, "skipped: no point-group symmetry"));
    return out;
  }
  auto table = fci::dimension_table(spectrum);
  int total = 0;
  std::string desc;
  for (const auto& [key, count] : table) {
    total += count;
    desc += fmt::format("{}/{}:{} ", d2h::label(key.first), key.second, count);
  }
  out.push_back(make_check("fci_oracle", "symmetry table", total == problem.sector.dim(), trim(desc)));

  // Triplet pathology inside the (S=1, totally symmetric) block.
  std::vector<int> trip;
  for (int j = 0; j < static_cast<int>(spectrum.labels.size()); ++j) {
    const auto& l = spectrum.labels[j];
    if (l.irrep == d2h::Irrep::Ag && l.spin && *l.spin == 1.0) trip.push_back(j);
  }
  if (trip.size() >= 2) {
    double worst = 0.0;
    for (size_t a = 0; a < trip.size(); ++a)
      for (size_t b = 0; b < trip.size(); ++b) {
        auto va = sim::StateVector::from_amplitudes(n, problem.sector.embed(Eigen::VectorXd(spectrum.vectors.col(trip[a]))));
        auto vb = sim::StateVector::from_amplitudes(n, problem.sector.embed(Eigen::VectorXd(spectrum.vectors.col(trip[b]))));
        Eigen::MatrixXcd d = sim::transition_2rdm(va, vb).matrix() - sim::transition_2rdm(vb, va).matrix();
        worst = std::max(worst, d.cwiseAbs().maxCoeff());
      }
    out.push_back(make_check("fci_oracle", "antisymmetric TDMs vanish in the S=1 A1g block", worst < 1e-8,
                             fmt::format("max {:.1e}", worst)));
    auto pool = refstates::guess_pool(problem.op, problem.n_spatial(), problem.n_electrons, 0.0, refstates::PoolKind::CSF);
    int spurious = 0, candidates = 0;
    residuals::ProjectionSet none;
    for (const auto& g : pool) {
      auto st = refstates::prepare(g.spec, n);
      auto l = label_state(problem, st);
      if (!(l.irrep == d2h::Irrep::Ag && l.spin && *l.spin == 1.0)) continue;
      ++candidates;
      auto terms = residuals::evaluate_terms(st, problem.op, none);
      double a = tangent.residual_norm(residuals::acpse_residual(terms, none, terms.energy).values.matrix());
      double var = terms.h2 - terms.energy * terms.energy;
      if (a < 1e-5 && var > 1e-5) ++spurious;
    }
    out.push_back(make_check("escqe", "spurious ACSE stationarity of S=1 A1g CSFs", candidates > 0 && spurious == candidates,
                             fmt::format("pathology reproduced for {}/{} CSFs", spurious, candidates)));
  }
  return out;
}

int cmd_validate(const RunConfig& config, const std::string& out_dir, const std::string& base_dir) {
  fs::create_directories(out_dir);
  auto checks = validation_checks(config, base_dir);
  auto f = open_out(fs::path(out_dir) / "validate.txt");
  bool ok = true;
  for (const auto& c : checks) {
    std::string line = fmt::format("{} {}: {} ({})", c.passed ? "PASS" : "FAIL", c.module, c.name, c.detail);
    f << line << '\n';
    fmt::print("{}\n", line);
    ok = ok && c.passed;
  }
  return ok ? 0 : 2;
}

// --------------------------------------------------------------- integrals --

int cmd_integrals(const RunConfig& config, const std::string& out_path, const std::string& base_dir) {
  const auto geom = config.make_geometry(base_dir);
  const auto ints = molint::build_integrals(geom, config.basis);
  const int ne = config.electrons < 0 ? geom.nuclear_charge() - geom.charge : config.electrons;
  molint::ScfOptions opt;
  opt.symmetry = molint::ao_symmetry(geom);
  const auto scf = molint::rhf(ints, ne, opt);
  molint::FcidumpData d;
  d.integrals = ints.transformed(scf.coefficients);
  d.norb = ints.nbasis();
  d.nelec = ne;
  d.ms2 = ne % 2;
  for (int g : scf.irreps) d.orbsym.push_back(g + 1);
  if (const auto parent = fs::path(out_path).parent_path(); !parent.empty()) fs::create_directories(parent);
  molint::write_fcidump(out_path, d);
  return 0;
}

}  // namespace escqe::harness
