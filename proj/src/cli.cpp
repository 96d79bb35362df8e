#include "effectmap/cli.hpp"

#include "effectmap/cm_effects.hpp"
#include "effectmap/design_space.hpp"
#include "effectmap/error.hpp"
#include "effectmap/objective.hpp"
#include "effectmap/optimizer.hpp"
#include "effectmap/pci.hpp"
#include "effectmap/planner.hpp"
#include "effectmap/rng.hpp"
#include "effectmap/serialize.hpp"
#include "effectmap/shapley_fit.hpp"
#include "effectmap/simulation.hpp"

#include <CLI11.hpp>

#include <chrono>
#include <cmath>
#include <ctime>
#include <iostream>
#include <map>
#include <sstream>

namespace effectmap::cli {

namespace {

struct Options {
  std::uint64_t seed = 0;
  std::string out, space, log, path = "cm", background = "uniform";
  double lambda_risk = 1.0, lambda_cost = 0.0, gamma = 1.0, tau = 1.0;

  std::size_t bootstrap = 200;
  double level = 0.95;
  std::size_t shapley_samples = 0;
  double ridge = 0.0;

  std::string objective;
  std::size_t restarts = 8, beam = 0, max_sweeps = 100, top_k = 10;
  double stop_tolerance = 0.0;

  std::string mode = "uniform";

  double B = 0.0, eps = 0.1, delta = 0.05;
  std::string levels;
  bool use_union = false, mc = false;
  std::uint64_t items = 1;

  std::string suite = "table2", axis, config;
  std::size_t trials = 0;

  // Set when the flag was given explicitly.
  bool set_lambda_risk = false, set_lambda_cost = false, set_gamma = false, set_B = false, set_trials = false;
};

class OutputDir {
 public:
  explicit OutputDir(const std::string& dir) : dir_(dir) {
    if (dir.empty()) throw Error(Errc::invalid_argument, "--out is required");
    std::error_code ec;
    std::filesystem::create_directories(dir_, ec);
    if (ec) throw Error(Errc::io_error, "cannot create output directory '" + dir + "': " + ec.message());
  }

  void write(const std::string& name, const std::string& content) {
    write_file_atomic(dir_ / name, content);
    outputs_[name] = sha256_hex(content);
  }

  void write_manifest(const std::string& subcommand, const nlohmann::json& config, const nlohmann::json& inputs,
                      std::uint64_t seed) {
    nlohmann::json m;
    m["subcommand"] = subcommand;
    m["config"] = config;
    m["inputs"] = inputs;
    m["seed"] = seed;
    m["version"] = tool_version;
    const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    char stamp[32];
    std::strftime(stamp, sizeof stamp, "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&now));
    m["timestamp"] = stamp;
    nlohmann::json outs = nlohmann::json::object();
    for (const auto& [name, digest] : outputs_) outs[name] = {{"path", (dir_ / name).string()}, {"sha256", digest}};
    m["outputs"] = outs;
    write_file_atomic(dir_ / "manifest.json", dump_json(m) + "\n");
  }

 private:
  std::filesystem::path dir_;
  std::map<std::string, std::string> outputs_;
};

nlohmann::json input_digest(const std::string& path) {
  if (path.empty()) return nullptr;
  return {{"path", path}, {"sha256", sha256_hex(read_text_file(path))}};
}

nlohmann::json common_config(const Options& o) {
  return {{"path", o.path},           {"background", o.background}, {"tau", o.tau},
          {"lambda_risk", o.lambda_risk}, {"lambda_cost", o.lambda_cost}, {"gamma", o.gamma}};
}

struct Inputs {
  FactorSpace space;
  std::optional<RunLog> log;
};

Inputs load_inputs(const Options& o) {
  if (o.space.empty()) throw Error(Errc::invalid_argument, "--space is required");
  if (o.log.empty()) throw Error(Errc::invalid_argument, "--log is required");
  Inputs in{load_space(o.space), std::nullopt};
  in.log.emplace(ingest_log(o.log, in.space));
  return in;
}

ReferenceDistribution centering_reference(const Options& o, const RunLog& log) {
  if (o.background == "uniform") return ReferenceDistribution::uniform(log.space());
  if (o.background == "empirical") return ReferenceDistribution::empirical(log);
  throw Error(Errc::invalid_argument, "--background must be uniform or empirical");
}

struct Estimate {
  EffectTable table;
  ReferenceDistribution reference;
  std::optional<FitDiagnostics> diagnostics;
  std::vector<ShapleyEstimate> shapley;
  std::size_t unobserved = 0;
};

Estimate estimate(const Options& o, const RunLog& log, bool with_intervals) {
  const FactorSpace& space = log.space();
  const ShrinkageSpec shrinkage = ShrinkageSpec::shared(space, o.tau, o.tau);
  if (o.path == "cm") {
    ReferenceDistribution ref = centering_reference(o, log);
    EffectTable t = with_intervals ? bootstrap_cis(log, ref, shrinkage, o.bootstrap, o.level, o.seed)
                                   : estimate_effects_cm(log, ref, shrinkage);
    return {std::move(t), std::move(ref), std::nullopt, {}, 0};
  }
  if (o.path != "sf") throw Error(Errc::invalid_argument, "--path must be cm or sf");
  // Shapley values need a product background; the empirical option uses the log's marginals.
  ReferenceDistribution bg = o.background == "uniform"   ? ReferenceDistribution::uniform(space)
                             : o.background == "empirical" ? ReferenceDistribution::empirical_marginals(log)
                                                           : throw Error(Errc::invalid_argument,
                                                                         "--background must be uniform or empirical");
  const ValueOracle oracle = ValueOracle::from_log(log, bg);
  std::vector<Config> points;
  for (const auto& r : log.records()) points.push_back(r.config);
  std::sort(points.begin(), points.end());
  points.erase(std::unique(points.begin(), points.end()), points.end());
  Estimate e{EffectTable(), bg, std::nullopt, {}, oracle.unobserved_cells()};
  for (const Config& x : points)
    e.shapley.push_back(o.shapley_samples == 0
                            ? exact_shapley(oracle, x)
                            : mc_shapley(oracle, x, o.shapley_samples,
                                         stream_seed(o.seed, {streams::shapley, space.rank(x)})));
  SfFitOptions opts;
  opts.ridge = o.ridge;
  opts.support = support_counts(log);
  SfFit fit = fit_effects_sf(e.shapley, space, bg, shrinkage, oracle.coalition_value(points.front(), 0).value, opts);
  e.table = std::move(fit.table);
  e.diagnostics = fit.diagnostics;
  return e;
}

std::string estimator_tag(const EffectTable& t) { return t.provenance == Provenance::sf ? "SF" : "CM"; }

std::string num_or_empty(const std::optional<double>& v) { return v ? format_number(*v) : ""; }

nlohmann::json config_json(const FactorSpace& space, const Config& x) {
  nlohmann::json j = nlohmann::json::object();
  for (std::size_t f = 0; f < space.dimension(); ++f) j[space.factor(f).name] = space.factor(f).levels[x[f]];
  return j;
}

std::vector<std::string> config_cells(const FactorSpace& space, const Config& x) {
  std::vector<std::string> cells;
  for (std::size_t f = 0; f < space.dimension(); ++f) cells.push_back(space.factor(f).levels[x[f]]);
  return cells;
}

ObjectiveSpec objective_spec(const Options& o, const FactorSpace& space, CostModel& cost) {
  ObjectiveSpec spec;
  cost = CostModel::zero(space);
  if (!o.objective.empty()) {
    const nlohmann::json doc = read_json_file(o.objective);
    try {
      spec.lambda_risk = doc.value("lambda_risk", spec.lambda_risk);
      spec.lambda_cost = doc.value("lambda_cost", spec.lambda_cost);
      if (doc.contains("gamma")) {
        const auto& g = doc.at("gamma");
        if (g.is_number()) {
          spec.default_gamma = g.get<double>();
        } else {
          spec.gamma.assign(space.pair_count(), spec.default_gamma);
          for (auto it = g.begin(); it != g.end(); ++it) {
            bool found = false;
            for (std::size_t p = 0; p < space.pair_count(); ++p)
              if (space.pair_name(p) == it.key()) {
                spec.gamma[p] = it.value().get<double>();
                found = true;
              }
            if (!found) throw Error(Errc::parse_error, "unknown factor pair '" + it.key() + "' in gamma");
          }
        }
      }
      auto factor_of = [&](const std::string& name) {
        auto j = space.find_factor(name);
        if (!j) throw Error(Errc::parse_error, "unknown factor '" + name + "' in objective");
        return *j;
      };
      auto level_of = [&](std::size_t j, const std::string& label) {
        auto l = space.find_level(j, label);
        if (!l) throw Error(Errc::parse_error, "unknown level '" + label + "' of '" + space.factor(j).name + "'");
        return *l;
      };
      if (doc.contains("banned_levels")) {
        spec.feasibility.banned_levels.resize(space.dimension());
        for (std::size_t j = 0; j < space.dimension(); ++j)
          spec.feasibility.banned_levels[j].assign(space.levels(j), false);
        for (auto it = doc.at("banned_levels").begin(); it != doc.at("banned_levels").end(); ++it) {
          const std::size_t j = factor_of(it.key());
          for (const auto& l : it.value()) spec.feasibility.banned_levels[j][level_of(j, l.get<std::string>())] = true;
        }
      }
      if (doc.contains("banned_configs")) {
        for (const auto& c : doc.at("banned_configs")) {
          std::vector<int> v(space.dimension(), -1);
          for (auto it = c.begin(); it != c.end(); ++it) {
            const std::size_t j = factor_of(it.key());
            v[j] = level_of(j, it.value().get<std::string>());
          }
          Config x(std::move(v));
          space.require_valid(x);
          spec.feasibility.ban_config(x);
        }
      }
      if (doc.contains("costs")) {
        for (auto it = doc.at("costs").begin(); it != doc.at("costs").end(); ++it) {
          const std::size_t j = factor_of(it.key());
          for (auto lt = it.value().begin(); lt != it.value().end(); ++lt)
            cost.level_costs[j](level_of(j, lt.key())) = lt.value().get<double>();
        }
      }
      cost.offset = doc.value("cost_offset", 0.0);
    } catch (const nlohmann::json::exception& e) {
      throw Error(Errc::parse_error, std::string("invalid objective document: ") + e.what());
    }
  }
  if (o.set_lambda_risk) spec.lambda_risk = o.lambda_risk;
  if (o.set_lambda_cost) spec.lambda_cost = o.lambda_cost;
  if (o.set_gamma) {
    spec.default_gamma = o.gamma;
    spec.gamma.clear();
  }
  spec.validate(space);
  cost.validate(space);
  return spec;
}

void write_table_outputs(OutputDir& out, const Estimate& e) {
  out.write("effects.json", dump_json(table_to_json(e.table)) + "\n");
  out.write("main_effects.csv", main_effects_csv(e.table));
  out.write("interactions.csv", interactions_csv(e.table));
  if (e.diagnostics) {
    const auto& d = *e.diagnostics;
    nlohmann::json diag = {{"sigma_min", d.sigma_min},   {"residual_norm", d.residual_norm},
                           {"N", d.rows},                {"p", d.parameters},
                           {"points", d.points},         {"unobserved_cells", e.unobserved}};
    out.write("diagnostics.json", dump_json(diag) + "\n");
    const FactorSpace& space = e.table.space;
    std::ostringstream csv;
    csv << "# units: phi_hat in response units; estimator: SF\n";
    std::vector<std::string> header;
    for (const auto& f : space.factors()) header.push_back(f.name);
    header.insert(header.end(), {"factor", "phi_hat", "variance", "M"});
    csv << join_csv_line(header) << '\n';
    for (const auto& s : e.shapley)
      for (std::size_t j = 0; j < space.dimension(); ++j) {
        auto cells = config_cells(space, s.point);
        cells.insert(cells.end(), {space.factor(j).name, format_number(s.phi[j]), format_number(s.variance[j]),
                                   std::to_string(s.samples)});
        csv << join_csv_line(cells) << '\n';
      }
    out.write("shapley.csv", csv.str());
  }
}

int cmd_estimate(const Options& o) {
  const Inputs in = load_inputs(o);
  const Estimate e = estimate(o, *in.log, o.path == "cm");
  OutputDir out(o.out);
  write_table_outputs(out, e);
  nlohmann::json cfg = common_config(o);
  cfg["bootstrap"] = o.bootstrap;
  cfg["level"] = o.level;
  cfg["shapley_samples"] = o.shapley_samples;
  cfg["ridge"] = o.ridge;
  out.write_manifest("estimate", cfg, {{"space", input_digest(o.space)}, {"log", input_digest(o.log)}}, o.seed);
  return 0;
}

int cmd_optimize(const Options& o) {
  const Inputs in = load_inputs(o);
  const FactorSpace& space = in.space;
  const Estimate e = estimate(o, *in.log, false);
  const SupportCounts support = support_counts(*in.log);
  CostModel cost;
  const ObjectiveSpec spec = objective_spec(o, space, cost);
  const Objective objective(e.table, support, spec, cost);

  SearchSpec search;
  search.restarts = o.restarts;
  search.beam = o.beam == 0 ? std::numeric_limits<std::size_t>::max() : o.beam;
  search.max_sweeps = o.max_sweeps;
  search.stop_tolerance = o.stop_tolerance;
  search.seed = stream_seed(o.seed, {streams::restart});
  const SearchResult result = multistart(objective, search);
  const SwapCheck check = verify_1swap(objective, result.best);
  const DominanceReport dom = diag_dominance_check(objective, dominance_context_cap, 10'000, o.seed);

  OutputDir out(o.out);
  const std::string tag = estimator_tag(e.table);
  nlohmann::json best = {{"config", config_json(space, result.best)},
                         {"J", result.value},
                         {"prediction", e.table.predict(result.best)},
                         {"risk", objective.risk(result.best)},
                         {"cost", cost.cost(result.best)},
                         {"one_swap_optimal", check.optimal},
                         {"two_swap_bound", check.optimal ? nlohmann::json(two_swap_bound(objective, result.best))
                                                          : nlohmann::json(nullptr)},
                         {"estimator", tag},
                         {"starts", result.traces.size()},
                         {"best_start", result.best_start},
                         {"converged", result.traces[result.best_start].termination == Termination::converged}};
  out.write("optimum.json", dump_json(best) + "\n");

  std::ostringstream trace;
  trace << "# units: J in response units; estimator: " << tag << "\n";
  std::vector<std::string> header{"start", "step", "sweep", "J"};
  for (const auto& f : space.factors()) header.push_back(f.name);
  trace << join_csv_line(header) << '\n';
  for (std::size_t s = 0; s < result.traces.size(); ++s)
    for (std::size_t i = 0; i < result.traces[s].steps.size(); ++i) {
      const auto& st = result.traces[s].steps[i];
      std::vector<std::string> cells{std::to_string(s), std::to_string(i), std::to_string(st.sweep),
                                     format_number(st.value)};
      for (auto& c : config_cells(space, st.config)) cells.push_back(c);
      trace << join_csv_line(cells) << '\n';
    }
  out.write("trace.csv", trace.str());

  nlohmann::json margins = nlohmann::json::object(), influence = nlohmann::json::object();
  for (std::size_t j = 0; j < space.dimension(); ++j) {
    margins[space.factor(j).name] = dom.margins[j];
    for (std::size_t k = 0; k < space.dimension(); ++k)
      if (k != j)
        influence[space.factor(j).name][space.factor(k).name] =
            dom.influence(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(k));
  }
  out.write("dominance.json", dump_json({{"margins", margins},
                                         {"influence", influence},
                                         {"holds", dom.holds},
                                         {"exact", dom.exact},
                                         {"contexts", dom.contexts}}) +
                                  "\n");

  // Intervals for J come from record-bootstrap replicates of the cell-mean tables.
  const auto top = rank_configs(objective, o.top_k);
  const ShrinkageSpec shrinkage = ShrinkageSpec::shared(space, o.tau, o.tau);
  const auto reps = bootstrap_replicates(*in.log, centering_reference(o, *in.log), shrinkage,
                                         std::max<std::size_t>(o.bootstrap, 100), o.seed);
  std::ostringstream topk;
  topk << "# units: J and prediction in response units; estimator: " << tag
       << "; ci: percentile over CM record-bootstrap replicates\n";
  std::vector<std::string> th{"rank"};
  for (const auto& f : space.factors()) th.push_back(f.name);
  th.insert(th.end(), {"J", "ci_lo", "ci_hi", "prediction", "risk"});
  topk << join_csv_line(th) << '\n';
  for (std::size_t r = 0; r < top.size(); ++r) {
    std::vector<double> values;
    for (const auto& rep : reps) values.push_back(Objective(rep, support, spec, cost).value_unchecked(top[r].config));
    const double alpha = (1.0 - o.level) / 2.0;
    std::vector<std::string> cells{std::to_string(r + 1)};
    for (auto& c : config_cells(space, top[r].config)) cells.push_back(c);
    cells.insert(cells.end(), {format_number(top[r].value), format_number(quantile(values, alpha)),
                               format_number(quantile(values, 1.0 - alpha)),
                               format_number(e.table.predict(top[r].config)),
                               format_number(objective.risk(top[r].config))});
    topk << join_csv_line(cells) << '\n';
  }
  out.write("topk.csv", topk.str());

  nlohmann::json cfg = common_config(o);
  cfg.update({{"restarts", o.restarts},
              {"beam", o.beam},
              {"max_sweeps", o.max_sweeps},
              {"stop_tolerance", o.stop_tolerance},
              {"top_k", o.top_k},
              {"bootstrap", o.bootstrap},
              {"level", o.level},
              {"objective_resolved",
               {{"lambda_risk", spec.lambda_risk}, {"lambda_cost", spec.lambda_cost}, {"gamma", spec.default_gamma}}}});
  out.write_manifest("optimize", cfg,
                     {{"space", input_digest(o.space)},
                      {"log", input_digest(o.log)},
                      {"objective", input_digest(o.objective)}},
                     o.seed);
  std::cout << dump_json(best["config"], -1) << " J=" << format_number(result.value) << "\n";
  return 0;
}

int cmd_pci(const Options& o) {
  const Inputs in = load_inputs(o);
  const FactorSpace& space = in.space;
  const Estimate e = estimate(o, *in.log, false);
  PciMode mode;
  if (o.mode == "uniform")
    mode = PciMode::uniform;
  else if (o.mode == "weighted")
    mode = PciMode::weighted;
  else
    throw Error(Errc::invalid_argument, "--mode must be uniform or weighted");
  const std::string tag = estimator_tag(e.table);

  std::ostringstream csv;
  csv << "# units: pci dimensionless, s_jk in response units; estimator: " << tag << "\n";
  csv << "factor_j,factor_k,level_j,level_k,pci,s_jk,mode\n";
  for (std::size_t p = 0; p < space.pair_count(); ++p) {
    auto [j, k] = space.pair_factors(p);
    const PciMatrix m = pci_matrix(e.table, j, k, mode, &e.reference);
    for (Eigen::Index a = 0; a < m.values.rows(); ++a)
      for (Eigen::Index b = 0; b < m.values.cols(); ++b)
        csv << join_csv_line({space.factor(j).name, space.factor(k).name,
                              space.factor(j).levels[static_cast<std::size_t>(a)],
                              space.factor(k).levels[static_cast<std::size_t>(b)], format_number(m.values(a, b)),
                              format_number(m.scale), std::string(pci_mode_name(mode))})
            << '\n';
  }
  std::ostringstream rank;
  rank << "# units: s_jk in response units (uniform RMS); estimator: " << tag << "\n";
  rank << "rank,factor_j,factor_k,s_jk\n";
  const auto ranking = pci_rank_pairs(e.table);
  for (std::size_t r = 0; r < ranking.size(); ++r)
    rank << join_csv_line({std::to_string(r + 1), space.factor(ranking[r].j).name, space.factor(ranking[r].k).name,
                           format_number(ranking[r].scale)})
         << '\n';
  OutputDir out(o.out);
  out.write("pci.csv", csv.str());
  out.write("pci_ranking.csv", rank.str());
  nlohmann::json cfg = common_config(o);
  cfg["mode"] = o.mode;
  out.write_manifest("pci", cfg, {{"space", input_digest(o.space)}, {"log", input_digest(o.log)}}, o.seed);
  return 0;
}

int cmd_plan(const Options& o) {
  double B = o.B;
  if (!o.set_B) {
    if (o.log.empty() || o.space.empty()) throw Error(Errc::invalid_argument, "--B is required without --space/--log");
    const Inputs in = load_inputs(o);
    B = infer_bound(*in.log);
  }
  std::uint64_t n = 0;
  std::ostringstream formula;
  const std::string b = format_number(B), e = format_number(o.eps), d = format_number(o.delta);
  nlohmann::json result;
  if (o.mc) {
    if (o.use_union && o.items < 1) throw Error(Errc::invalid_argument, "--items must be positive");
    const std::uint64_t items = o.use_union ? o.items : 1;
    const double raw = mc_sample_bound(B, o.eps, o.delta, items);
    n = mc_sample_size(B, o.eps, o.delta, items);
    formula << "M = ceil(8 * B^2 / eps^2 * ln(2 * " << items << " / delta)) = ceil(8 * " << b << "^2 / " << e
            << "^2 * ln(2 * " << items << " / " << d << ")) = ceil(" << format_number(raw) << ")";
    result = {{"kind", "mc"}, {"items", items}, {"bound", raw}};
  } else if (o.use_union || !o.levels.empty()) {
    std::size_t Lj = 1, Lk = 1;
    if (!o.levels.empty()) {
      const auto parts = split_csv_line(o.levels);
      auto lj = parts.size() == 2 ? parse_int(parts[0]) : std::nullopt;
      auto lk = parts.size() == 2 ? parse_int(parts[1]) : std::nullopt;
      if (!lj || !lk || *lj < 1 || *lk < 1) throw Error(Errc::invalid_argument, "--levels expects two positive counts j,k");
      Lj = static_cast<std::size_t>(*lj);
      Lk = static_cast<std::size_t>(*lk);
    }
    const double raw = uniform_cells_bound(B, o.eps, o.delta, Lj, Lk);
    n = uniform_cells_n(B, o.eps, o.delta, Lj, Lk);
    formula << "n = ceil(2 * B^2 / eps^2 * ln(2 * Lj * Lk / delta)) = ceil(2 * " << b << "^2 / " << e << "^2 * ln(2 * "
            << Lj << " * " << Lk << " / " << d << ")) = ceil(" << format_number(raw) << ")";
    result = {{"kind", "uniform_cells"}, {"levels", {Lj, Lk}}, {"bound", raw}};
  } else {
    const double raw = hoeffding_cell_bound(B, o.eps, o.delta);
    n = hoeffding_cell_n(B, o.eps, o.delta);
    formula << "n = ceil(2 * B^2 / eps^2 * ln(2 / delta)) = ceil(2 * " << b << "^2 / " << e << "^2 * ln(2 / " << d
            << ")) = ceil(" << format_number(raw) << ")";
    result = {{"kind", "cell"}, {"bound", raw}};
  }
  std::cout << n << "\n" << formula.str() << "\n";
  if (!o.out.empty()) {
    result.update({{"n", n}, {"B", B}, {"eps", o.eps}, {"delta", o.delta}, {"formula", formula.str()}});
    OutputDir out(o.out);
    out.write("plan.json", dump_json(result) + "\n");
    out.write_manifest("plan",
                       {{"B", B}, {"eps", o.eps}, {"delta", o.delta}, {"levels", o.levels}, {"union", o.use_union},
                        {"mc", o.mc}, {"items", o.items}},
                       {{"space", input_digest(o.space)}, {"log", input_digest(o.log)}}, o.seed);
  }
  return 0;
}

std::string suite_csv(const std::vector<SuiteRow>& rows) {
  std::ostringstream csv;
  csv << "# units: reconstruction_error and optimality_gap in teacher response units, spearman dimensionless; "
         "estimator per row\n";
  csv << "axis,cell,estimator,metric,mean,ci_lo,ci_hi,n_trials,config_hash\n";
  for (const auto& r : rows)
    csv << join_csv_line({r.axis, r.cell, r.estimator, r.metric, format_number(r.mean), format_number(r.ci_lo),
                          format_number(r.ci_hi), std::to_string(r.trials), r.config_hash})
        << '\n';
  return csv.str();
}

SuiteConfig suite_config(const Options& o) {
  SuiteConfig c = o.config.empty() ? SuiteConfig{} : SuiteConfig::from_json(read_json_file(o.config));
  if (o.set_trials) c.trials = o.trials;
  if (c.trials < 1) throw Error(Errc::invalid_argument, "--trials must be positive");
  c.seed = o.seed;
  return c;
}

void print_rows(const std::vector<SuiteRow>& rows) {
  for (const auto& r : rows)
    std::cout << r.axis << " " << r.cell << " " << r.estimator << " " << r.metric << " " << format_number(r.mean)
              << " [" << format_number(r.ci_lo) << ", " << format_number(r.ci_hi) << "]\n";
}

int cmd_simulate(const Options& o) {
  if (o.suite != "table2") throw Error(Errc::invalid_argument, "unknown suite '" + o.suite + "'");
  const SuiteConfig c = suite_config(o);
  const auto rows = table2_suite(c);
  OutputDir out(o.out);
  out.write("results.csv", suite_csv(rows));
  out.write_manifest("simulate", {{"suite", o.suite}, {"suite_config", c.to_json()}},
                     {{"config", input_digest(o.config)}}, o.seed);
  print_rows(rows);
  return 0;
}

int cmd_ablate(const Options& o) {
  const AblationAxis axis = parse_axis(o.axis);
  const SuiteConfig c = suite_config(o);
  const auto rows = ablation_suite(axis, c);
  OutputDir out(o.out);
  out.write("results.csv", suite_csv(rows));
  out.write_manifest("ablate", {{"axis", o.axis}, {"suite_config", c.to_json()}}, {{"config", input_digest(o.config)}},
                     o.seed);
  print_rows(rows);
  return 0;
}

void report_error(const std::string& code, const std::string& message, const std::string& out_dir) {
  const nlohmann::json err = {{"error", {{"code", code}, {"message", message}}}};
  std::cerr << dump_json(err, -1) << "\n";
  if (out_dir.empty()) return;
  try {
    std::filesystem::create_directories(out_dir);
    write_file_atomic(std::filesystem::path(out_dir) / "error.json", dump_json(err) + "\n");
  } catch (...) {
  }
}

}  // namespace

std::string main_effects_csv(const EffectTable& t) {
  const FactorSpace& space = t.space;
  const std::string tag = estimator_tag(t);
  std::ostringstream csv;
  csv << "# units: response; estimator: " << tag << "; mean: "
      << (t.level_means.empty() ? "baseline plus fitted main effect" : "weighted conditional mean at the level")
      << "; effect: centered shrunk main effect\n";
  csv << "factor,level,mean,ci_lo,ci_hi,effect,support\n";
  for (std::size_t j = 0; j < space.dimension(); ++j)
    for (std::size_t l = 0; l < space.levels(j); ++l) {
      const double mean = t.level_means.empty() ? t.mu + t.mains[j](l) : t.level_means[j](l);
      std::optional<double> lo, hi, support;
      if (t.intervals && !t.intervals->level_means.empty()) {
        lo = t.intervals->level_means[j][l].lo;
        hi = t.intervals->level_means[j][l].hi;
      }
      if (t.support) support = t.support->level[j](l);
      csv << join_csv_line({space.factor(j).name, space.factor(j).levels[l], format_number(mean), num_or_empty(lo),
                            num_or_empty(hi), format_number(t.mains[j](l)), num_or_empty(support)})
          << '\n';
    }
  return csv.str();
}

std::string interactions_csv(const EffectTable& t) {
  const FactorSpace& space = t.space;
  std::ostringstream csv;
  csv << "# units: response; estimator: " << estimator_tag(t) << "; effect: double-centered shrunk interaction\n";
  csv << "factor_j,factor_k,level_j,level_k,effect,ci_lo,ci_hi,support\n";
  for (std::size_t p = 0; p < space.pair_count(); ++p) {
    auto [j, k] = space.pair_factors(p);
    const auto& g = t.pairs[p];
    for (Eigen::Index a = 0; a < g.rows(); ++a)
      for (Eigen::Index b = 0; b < g.cols(); ++b) {
        std::optional<double> lo, hi, support;
        if (t.intervals) {
          const auto& iv = t.intervals->pairs[p][static_cast<std::size_t>(a * g.cols() + b)];
          lo = iv.lo;
          hi = iv.hi;
        }
        if (t.support) support = t.support->pair[p](a, b);
        csv << join_csv_line({space.factor(j).name, space.factor(k).name,
                              space.factor(j).levels[static_cast<std::size_t>(a)],
                              space.factor(k).levels[static_cast<std::size_t>(b)], format_number(g(a, b)),
                              num_or_empty(lo), num_or_empty(hi), num_or_empty(support)})
            << '\n';
      }
  }
  return csv.str();
}

int run(int argc, char** argv) {
  CLI::App app{"Factorial effect maps: estimation, search, and planning from experiment logs"};
  app.set_version_flag("--version", tool_version);
  app.require_subcommand(1);
  app.fallthrough();
  Options o;
  app.add_option("--seed", o.seed, "Seed for all randomness");
  app.add_option("--out", o.out, "Output directory");
  app.add_option("--space", o.space, "Factor space JSON");
  app.add_option("--log", o.log, "Run-log CSV");
  app.add_option("--path", o.path, "Estimator: cm or sf")->check(CLI::IsMember({"cm", "sf"}));
  app.add_option("--background", o.background, "Reference: uniform or empirical")
      ->check(CLI::IsMember({"uniform", "empirical"}));
  auto* lr = app.add_option("--lambda-risk", o.lambda_risk, "Risk weight");
  auto* lc = app.add_option("--lambda-cost", o.lambda_cost, "Cost weight");
  auto* gm = app.add_option("--gamma", o.gamma, "Risk penalty constant");
  app.add_option("--tau", o.tau, "Shrinkage pseudo-count");

  auto* est = app.add_subcommand("estimate", "Estimate main effects and interactions");
  est->add_option("--bootstrap", o.bootstrap, "Bootstrap replicates");
  est->add_option("--level", o.level, "Interval coverage");
  est->add_option("--shapley-samples", o.shapley_samples, "Permutations per point (0 = exact)");
  est->add_option("--ridge", o.ridge, "Tikhonov weight for the Shapley fit");

  auto* opt = app.add_subcommand("optimize", "Search for the best configuration");
  opt->add_option("--objective", o.objective, "Objective and cost JSON");
  opt->add_option("--restarts", o.restarts, "Number of starts");
  opt->add_option("--beam", o.beam, "Top levels per factor for random starts (0 = all)");
  opt->add_option("--max-sweeps", o.max_sweeps, "Sweep limit per start");
  opt->add_option("--stop-tolerance", o.stop_tolerance, "Minimum accepted improvement");
  opt->add_option("--top-k", o.top_k, "Rows in the ranked table");
  opt->add_option("--bootstrap", o.bootstrap, "Bootstrap replicates for intervals");
  opt->add_option("--level", o.level, "Interval coverage");
  opt->add_option("--shapley-samples", o.shapley_samples, "Permutations per point (0 = exact)");
  opt->add_option("--ridge", o.ridge, "Tikhonov weight for the Shapley fit");

  auto* pci = app.add_subcommand("pci", "Pairwise complementarity maps");
  pci->add_option("--mode", o.mode, "uniform or weighted")->check(CLI::IsMember({"uniform", "weighted"}));
  pci->add_option("--shapley-samples", o.shapley_samples, "Permutations per point (0 = exact)");
  pci->add_option("--ridge", o.ridge, "Tikhonov weight for the Shapley fit");

  auto* plan = app.add_subcommand("plan", "Sample sizes from concentration bounds");
  auto* bopt = plan->add_option("--B", o.B, "Bound on |response|");
  plan->add_option("--eps", o.eps, "Target accuracy");
  plan->add_option("--delta", o.delta, "Failure probability");
  plan->add_option("--levels", o.levels, "Level counts j,k for the union over cells");
  plan->add_flag("--union", o.use_union, "Union bound over cells or evaluation items");
  plan->add_flag("--mc", o.mc, "Monte Carlo Shapley sample size");
  plan->add_option("--items", o.items, "d times evaluation-set size for --mc --union");

  auto* sim = app.add_subcommand("simulate", "Synthetic-teacher comparison of estimators");
  sim->add_option("--suite", o.suite, "Suite name (table2)");
  auto* st = sim->add_option("--trials", o.trials, "Trials per cell");
  sim->add_option("--config", o.config, "Suite config JSON");

  auto* abl = app.add_subcommand("ablate", "Ablation axes");
  abl->add_option("--axis", o.axis, "effects-order | design-robustness | shap-background | seed-budget")->required();
  auto* at = abl->add_option("--trials", o.trials, "Trials per cell");
  abl->add_option("--config", o.config, "Suite config JSON");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }
  o.set_lambda_risk = lr->count() > 0;
  o.set_lambda_cost = lc->count() > 0;
  o.set_gamma = gm->count() > 0;
  o.set_B = bopt->count() > 0;
  o.set_trials = st->count() > 0 || at->count() > 0;

  try {
    if (est->parsed()) return cmd_estimate(o);
    if (opt->parsed()) return cmd_optimize(o);
    if (pci->parsed()) return cmd_pci(o);
    if (plan->parsed()) return cmd_plan(o);
    if (sim->parsed()) return cmd_simulate(o);
    if (abl->parsed()) return cmd_ablate(o);
  } catch (const Error& e) {
    report_error(std::string(errc_name(e.code())), e.what(), o.out);
    return 1;
  } catch (const std::exception& e) {
    report_error("internal", e.what(), o.out);
    return 1;
  }
  return 1;
}

int run(const std::vector<std::string>& args) {
  std::vector<std::string> copy = args;
  std::vector<char*> argv;
  for (auto& a : copy) argv.push_back(a.data());
  argv.push_back(nullptr);
  return run(static_cast<int>(copy.size()), argv.data());
}

}  // namespace effectmap::cli
