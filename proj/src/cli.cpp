#include "boxcd/cli.hpp"

#include "boxcd/config.hpp"
#include "boxcd/harness.hpp"
#include "boxcd/io.hpp"
#include "boxcd/regions.hpp"
#include "boxcd/sampler.hpp"

#include "CLI11.hpp"

#include <boost/algorithm/string.hpp>

#include <chrono>
#include <cstdlib>
#include <functional>
#include <iostream>
#include <map>
#include <optional>

namespace boxcd {

namespace fs = std::filesystem;

namespace {

struct Options {
  std::string config_path;
  std::vector<std::string> overrides;
  std::optional<std::uint64_t> seed;
  std::optional<std::int64_t> proposals;
  std::optional<int> pseudo_samples;
  std::vector<double> alphas;
  std::optional<std::string> rule;
  std::optional<std::string> model;
  std::optional<std::string> support;
  std::optional<std::string> draws;
  unsigned workers = 1;
  std::string out_dir;
};

struct Context {
  std::string command;
  Config config;
  unsigned workers = 1;
  fs::path out_dir;
  std::ostream& out;
  std::ostream& err;
  std::vector<std::string> outputs;

  fs::path output(const std::string& name) {
    outputs.push_back(name);
    return out_dir / name;
  }
};

std::string join_doubles(const std::vector<double>& values) {
  std::vector<std::string> parts;
  for (double v : values) parts.push_back(format_double(v));
  return boost::algorithm::join(parts, ",");
}

std::string seed_key(const std::string& command) {
  if (command == "simulate") return "observed.seed";
  if (command == "sample" || command == "region") return "sampler.seed";
  if (command == "scaling") return "scaling.seed";
  if (command == "variability") return "variability.seed";
  return "study.seed";
}

std::string proposals_key(const std::string& command) {
  if (command == "scaling") return "scaling.R";
  if (command == "variability") return "variability.R";
  return "sampler.R";
}

std::string pseudo_samples_key(const std::string& command) {
  if (command == "scaling") return "scaling.pseudo_samples";
  if (command == "variability") return "variability.pseudo_samples";
  return "sampler.S";
}

// "lo:hi[,lo:hi...]"
void apply_support_flag(Config& config, const std::string& text) {
  std::vector<std::string> pairs;
  boost::algorithm::split(pairs, text, boost::is_any_of(","));
  std::vector<std::string> lower, upper;
  for (const auto& pair : pairs) {
    std::vector<std::string> ends;
    boost::algorithm::split(ends, pair, boost::is_any_of(":"));
    if (ends.size() != 2) throw ConfigError("--support", "expected lo:hi[,lo:hi...], got '" + text + "'");
    lower.push_back(boost::algorithm::trim_copy(ends[0]));
    upper.push_back(boost::algorithm::trim_copy(ends[1]));
  }
  config.set("model.support_lower", boost::algorithm::join(lower, ","));
  config.set("model.support_upper", boost::algorithm::join(upper, ","));
}

/// Defaults < config file < --override < dedicated flags.
Config resolve_config(const std::string& command, const Options& opts) {
  Config config = opts.config_path.empty() ? Config() : Config::load(opts.config_path);
  for (const auto& o : opts.overrides) config.apply_override(o);
  if (opts.model) config.set("model.name", *opts.model);
  if (opts.support) apply_support_flag(config, *opts.support);
  if (opts.seed) config.set(seed_key(command), std::to_string(*opts.seed));
  if (opts.proposals) config.set(proposals_key(command), std::to_string(*opts.proposals));
  if (opts.pseudo_samples)
    config.set(pseudo_samples_key(command), std::to_string(*opts.pseudo_samples));
  if (!opts.alphas.empty()) {
    if (command == "region") {
      config.set("region.alpha", join_doubles(opts.alphas));
    } else {
      std::vector<double> levels;
      for (double a : opts.alphas) levels.push_back(1.0 - a);
      config.set("study.levels", join_doubles(levels));
    }
  }
  if (opts.rule) config.set(command == "region" ? "region.rule" : "study.rule", *opts.rule);
  if (opts.draws) config.set("region.draws", *opts.draws);
  return config;
}

// ---------------------------------------------------------------------------
// Observed data: [observed] file, or a draw at theta0 with [observed] seed.

DataSet observed_data(const Config& config, const Model& model, const ModelConfig& model_config) {
  if (const auto file = config.find("observed.file")) {
    CsvTable table;
    try {
      table = read_csv(*file);
    } catch (const IoError& e) {
      throw IoError(std::string("observed.file: ") + e.what());
    }
    if (table.values.rows() == 0) throw IoError("observed.file: '" + *file + "' has no rows");
    return table.values;
  }
  const ParamVector theta0 = theta0_from(config, model_config);
  if (theta0.size() != model.param_dim())
    throw ConfigError("model.theta0", "expected " + std::to_string(model.param_dim()) + " values");
  Rng rng(derive_seed(config.get_seed("observed.seed", 1), "observed", 0));
  return model.simulate(theta0, rng);
}

int cmd_simulate(Context& ctx) {
  const ModelConfig mc = model_config_from(ctx.config);
  const auto model = make_model(mc);
  const DataSet data = observed_data(ctx.config, *model, mc);
  write_dataset(ctx.output("observed.csv"), data);
  ctx.out << "simulated " << data.rows() << " rows from model " << mc.name << "\n";
  return kExitOk;
}

int cmd_sample(Context& ctx) {
  const ModelConfig mc = model_config_from(ctx.config);
  const auto model = make_model(mc);
  SamplerConfig sc = sampler_config_from(ctx.config, mc);
  sc.workers = ctx.workers;
  const DataSet data = observed_data(ctx.config, *model, mc);
  const SummaryVector t_obs = model->summarize(data);
  const SamplerOutput result = run_sampler(*model, t_obs, sc);

  write_accepted_draws(ctx.output("accepted.csv"), result);
  const Support& support = sc.support ? *sc.support : model->support();
  Json summary{{"model", mc.name},
               {"proposals", result.n_proposed},
               {"pseudo_samples", sc.pseudo_samples},
               {"accepted", result.n_accepted()},
               {"acceptance_rate", result.acceptance_rate()},
               {"support", to_json(support)},
               {"observed_summary", to_json(t_obs)},
               {"boundary_diagnostic", to_json(result.boundary_diagnostic)}};
  write_json(ctx.output("sample.json"), summary);
  if (result.boundary_diagnostic.any_flag())
    ctx.err << "warning: accepted draws pile up at the support boundary; widen the support\n";
  ctx.out << "accepted " << result.n_accepted() << " of " << result.n_proposed << " ("
          << format_double(result.acceptance_rate()) << ")\n";
  return kExitOk;
}

Matrix<double> theta_columns(const CsvTable& table) {
  std::vector<Eigen::Index> cols;
  for (std::size_t j = 0; j < table.header.size(); ++j)
    if (boost::algorithm::starts_with(table.header[j], "theta_"))
      cols.push_back(static_cast<Eigen::Index>(j));
  if (cols.empty())
    for (std::size_t j = 0; j < table.header.size(); ++j)
      cols.push_back(static_cast<Eigen::Index>(j));
  Matrix<double> out(table.values.rows(), static_cast<Eigen::Index>(cols.size()));
  for (std::size_t k = 0; k < cols.size(); ++k)
    out.col(static_cast<Eigen::Index>(k)) = table.values.col(cols[k]);
  return out;
}

int cmd_region(Context& ctx) {
  const std::string draws_path = ctx.config.require_string("region.draws");
  Matrix<double> draws = theta_columns(read_csv(draws_path));
  if (draws.rows() == 0)
    throw NumericalError(draws_path + ": no accepted draws to build a region from");
  const Eigen::Index p = draws.cols();

  const ModelConfig mc = model_config_from(ctx.config);
  const Support support = mc.support ? *mc.support : default_support(mc);
  if (support.dim() != p)
    throw ConfigError("model.support_lower", "support has dimension " +
                                                 std::to_string(support.dim()) + " but draws have " +
                                                 std::to_string(p) + " columns");

  const std::vector<double> alphas = ctx.config.get_doubles("region.alpha", {0.05});
  RuleKind kind = default_rule_kind(p);
  if (const auto r = ctx.config.find("region.rule"); r && *r != "auto") {
    try {
      kind = parse_rule_kind(*r);
    } catch (const ContractViolation& e) {
      throw ConfigError("region.rule", e.what());
    }
  }
  for (double a : alphas)
    if (!(a > 0.0 && a < 1.0)) throw ConfigError("region.alpha", "alpha must lie inside (0, 1)");

  const Eigen::Index default_points = p == 1 ? kScalarGridPoints : p == 2 ? 101 : 31;
  Lattice lattice = lattice_over(support, ctx.config.get_int("region.grid_points", default_points));
  if (ctx.config.has("region.grid_lower") || ctx.config.has("region.grid_upper")) {
    const auto lo = ctx.config.get_doubles("region.grid_lower",
                                           {support.lower.data(), support.lower.data() + p});
    const auto hi = ctx.config.get_doubles("region.grid_upper",
                                           {support.upper.data(), support.upper.data() + p});
    if (static_cast<Eigen::Index>(lo.size()) != p || static_cast<Eigen::Index>(hi.size()) != p)
      throw ConfigError("region.grid_lower", "expected " + std::to_string(p) + " values");
    lattice.lower = Eigen::Map<const Vector<double>>(lo.data(), p);
    lattice.upper = Eigen::Map<const Vector<double>>(hi.data(), p);
  }

  const auto surface = std::make_shared<const DepthSurface>(DepthSurface::fit(std::move(draws), support));

  std::vector<std::string> header;
  for (Eigen::Index j = 0; j < p; ++j) header.push_back("theta_" + std::to_string(j + 1));
  header.push_back("depth");
  for (double a : alphas) header.push_back("in_region_" + format_double(a));
  Matrix<double> grid(lattice.size(), p + 1 + static_cast<Eigen::Index>(alphas.size()));

  Json regions = Json::array();
  for (std::size_t k = 0; k < alphas.size(); ++k) {
    const ConfidenceRegion region(surface, RegionRule{kind, alphas[k]});
    const auto rows = export_region_grid(region, lattice);
    for (Eigen::Index i = 0; i < lattice.size(); ++i) {
      const auto& row = rows[static_cast<std::size_t>(i)];
      if (k == 0) {
        grid.row(i).head(p) = row.theta.transpose();
        grid(i, p) = row.depth;
      }
      grid(i, p + 1 + static_cast<Eigen::Index>(k)) = row.in_region ? 1.0 : 0.0;
    }
    const Eigen::Index components = region_components(rows, lattice);
    Json entry{{"alpha", alphas[k]},
               {"level", 1.0 - alphas[k]},
               {"threshold", region.threshold()},
               {"accepted_members", region.accepted_members().size()},
               {"grid_components", components},
               {"multimodal", components > 1}};
    if (p == 1) {
      const ScalarInterval iv = scalar_interval(*surface, region.rule());
      entry["interval"] = Json{{"lower", iv.lower},
                               {"upper", iv.upper},
                               {"length", iv.length()},
                               {"multimodal", iv.multimodal}};
      entry["multimodal"] = iv.multimodal || components > 1;
    }
    regions.push_back(entry);
  }
  write_csv(ctx.output("region_grid.csv"), header, grid);

  Json report{{"draws", surface->size()},
              {"rule", std::string(to_string(kind))},
              {"support", to_json(support)},
              {"bandwidth", surface->bandwidth()},
              {"coordinate_bandwidths", to_json(surface->coordinate_bandwidths())},
              {"theta_hat", to_json(surface->theta_hat())},
              {"max_depth", surface->max_depth()},
              {"grid", Json{{"lower", to_json(lattice.lower)},
                            {"upper", to_json(lattice.upper)},
                            {"counts", lattice.counts}}},
              {"regions", regions}};
  write_json(ctx.output("region.json"), report);
  ctx.out << "region fitted on " << surface->size() << " draws, " << alphas.size()
          << " level(s)\n";
  return kExitOk;
}

CoverageStudySpec study_spec(const Context& ctx) {
  CoverageStudySpec spec = study_spec_from(ctx.config);
  spec.workers = ctx.workers;
  return spec;
}

void require_some_valid(const CoverageReport& report) {
  if (report.valid == 0)
    throw NumericalError("every replicate failed (" + std::to_string(report.replicates) +
                         " of " + std::to_string(report.replicates) + ")");
}

int cmd_coverage(Context& ctx) {
  const CoverageStudySpec spec = study_spec(ctx);
  const CoverageReport boxcd = run_coverage_study(spec);
  require_some_valid(boxcd);
  Json report{{"boxcd", to_json(boxcd)}};
  std::string text = coverage_text(boxcd);

  const auto probe = make_model(spec.model);
  const std::string lrt_mode = ctx.config.get_string("study.lrt", "auto");
  const bool want_lrt = lrt_mode == "auto" ? probe->has_likelihood()
                                           : ctx.config.get_bool("study.lrt", false);
  if (want_lrt) {
    const CoverageReport lrt = run_lrt_coverage(spec);
    report["lrt"] = to_json(lrt);
    text += "\n" + coverage_text(lrt);
  }
  write_json(ctx.output("coverage.json"), report);
  write_text(ctx.output("coverage.txt"), text);
  ctx.out << text;
  return kExitOk;
}

int cmd_lrt(Context& ctx) {
  const CoverageReport lrt = run_lrt_coverage(study_spec(ctx));
  require_some_valid(lrt);
  write_json(ctx.output("lrt.json"), to_json(lrt));
  const std::string text = coverage_text(lrt);
  write_text(ctx.output("lrt.txt"), text);
  ctx.out << text;
  return kExitOk;
}

int cmd_lengths(Context& ctx) {
  const LengthReport report = run_length_study(study_spec(ctx));
  write_json(ctx.output("lengths.json"), to_json(report));
  const std::string text = lengths_text(report);
  write_text(ctx.output("lengths.txt"), text);
  ctx.out << text;
  return kExitOk;
}

int cmd_median(Context& ctx) {
  const std::string estimator = ctx.config.get_string("study.estimator", "depth-max");
  EstimatorKind kind = EstimatorKind::DepthMax;
  if (estimator == "accepted-median") {
    kind = EstimatorKind::AcceptedMedian;
  } else if (estimator != "depth-max") {
    throw ConfigError("study.estimator", "expected 'depth-max' or 'accepted-median'");
  }
  const auto report = run_median_unbiasedness_study(study_spec(ctx), kind);
  write_json(ctx.output("median.json"), to_json(report));
  ctx.out << "fraction at or below theta0: " << format_double(report.fraction) << " (se "
          << format_double(report.standard_error) << ")\n";
  return kExitOk;
}

int cmd_scaling(Context& ctx) {
  ScalingSpec spec = scaling_spec_from(ctx.config);
  spec.workers = ctx.workers;
  const auto cells = run_scaling_study(spec);
  Matrix<double> table(static_cast<Eigen::Index>(cells.size()), 4);
  for (std::size_t i = 0; i < cells.size(); ++i) {
    const auto r = static_cast<Eigen::Index>(i);
    table(r, 0) = static_cast<double>(cells[i].n);
    table(r, 1) = cells[i].pseudo_samples;
    table(r, 2) = static_cast<double>(cells[i].accepted);
    table(r, 3) = cells[i].ratio_to_s2;
  }
  write_csv(ctx.output("scaling.csv"), {"n", "S", "accepted", "ratio_to_s2"}, table);
  ctx.out << "scaling table with " << cells.size() << " cells\n";
  return kExitOk;
}

int cmd_variability(Context& ctx) {
  const Config& c = ctx.config;
  VariabilitySpec spec;
  spec.model = model_config_from(c);
  const auto model = make_model(spec.model);
  spec.observed = observed_data(c, *model, spec.model);
  spec.pseudo_samples.clear();
  for (double s : c.get_doubles("variability.pseudo_samples", {4, 10})) {
    if (s < 2 || static_cast<int>(s) % 2 != 0 || s != std::floor(s))
      throw ConfigError("variability.pseudo_samples", "S must be even and >= 2");
    spec.pseudo_samples.push_back(static_cast<int>(s));
  }
  spec.replications = static_cast<int>(c.get_int("variability.replications", 5));
  if (spec.replications < 1) throw ConfigError("variability.replications", "must be at least 1");
  spec.proposals = c.get_int("variability.R", 10000);
  if (spec.proposals < 1) throw ConfigError("variability.R", "must be at least 1");
  const Support& support = model->support();
  spec.grid = linspace(c.get_double("variability.grid_lower", support.lower(0)),
                       c.get_double("variability.grid_upper", support.upper(0)),
                       c.get_int("variability.grid_points", 301));
  spec.seed = c.get_seed("variability.seed", 1);
  spec.workers = ctx.workers;

  const auto families = run_s_variability_study(spec);
  const Eigen::Index g = spec.grid.size();
  Matrix<double> curves(static_cast<Eigen::Index>(families.size()) * spec.replications * g, 4);
  Matrix<double> sds(static_cast<Eigen::Index>(families.size()) * g, 3);
  Json summary = Json::array();
  Eigen::Index row = 0, srow = 0;
  for (const auto& fam : families) {
    for (int r = 0; r < spec.replications; ++r)
      for (Eigen::Index i = 0; i < g; ++i, ++row)
        curves.row(row) << fam.pseudo_samples, r, spec.grid(i), fam.curves(r, i);
    for (Eigen::Index i = 0; i < g; ++i, ++srow)
      sds.row(srow) << fam.pseudo_samples, spec.grid(i), fam.pointwise_sd(i);
    summary.push_back(Json{{"pseudo_samples", fam.pseudo_samples}, {"mean_sd", fam.mean_sd}});
  }
  write_csv(ctx.output("variability_curves.csv"), {"S", "replication", "theta", "depth"}, curves);
  write_csv(ctx.output("variability_sd.csv"), {"S", "theta", "sd"}, sds);
  write_json(ctx.output("variability.json"),
             Json{{"replications", spec.replications}, {"families", summary}});
  for (const auto& fam : families)
    ctx.out << "S=" << fam.pseudo_samples << " mean pointwise sd " << format_double(fam.mean_sd)
            << "\n";
  return kExitOk;
}

int cmd_abc_compare(Context& ctx) {
  const Config& c = ctx.config;
  const auto max_dim = c.get_int("abc.max_dim", 30);
  const double eps = c.get_double("abc.eps", 0.5);
  const double v = c.get_double("abc.v", 1.0);
  const double x = c.get_double("abc.x", 0.5);
  if (max_dim < 1) throw ConfigError("abc.max_dim", "must be at least 1");
  if (!(eps > 0)) throw ConfigError("abc.eps", "must be positive");
  if (!(v >= 0)) throw ConfigError("abc.v", "must be non-negative");
  if (!(x > 0 && x < 1)) throw ConfigError("abc.x", "must lie inside (0, 1)");
  const auto rows = decay_table(static_cast<int>(max_dim), eps, v, x);
  Matrix<double> table(static_cast<Eigen::Index>(rows.size()), 4);
  for (std::size_t i = 0; i < rows.size(); ++i)
    table.row(static_cast<Eigen::Index>(i)) << rows[i].dim, rows[i].abc, rows[i].box_bound,
        rows[i].box_factor2;
  write_csv(ctx.output("abc_compare.csv"), {"d", "abc", "box_bound", "box_factor2"}, table);
  ctx.out << "decay table for d = 1.." << max_dim << "\n";
  return kExitOk;
}

void write_manifest(Context& ctx, double wall_seconds) {
  const std::string snapshot = ctx.command + ".config.ini";
  write_text(ctx.output(snapshot), ctx.config.to_ini());
  Json config = Json::object();
  for (const auto& [section, children] : ctx.config.tree())
    for (const auto& [key, value] : children) config[section][key] = value.data();
  Json manifest{{"command", ctx.command},
                {"tool_version", kToolVersion},
                {"master_seed", ctx.config.get_seed(seed_key(ctx.command), 1)},
                {"workers", ctx.workers},
                {"wall_seconds", wall_seconds},
                {"config", config},
                {"outputs", ctx.outputs}};
  write_json(ctx.out_dir / (ctx.command + ".manifest.json"), manifest);
}

void add_common_options(CLI::App* sub, Options& o) {
  sub->add_option("--config", o.config_path, "Configuration file");
  sub->add_option("--override", o.overrides, "section.key=value (repeatable)");
  sub->add_option("--seed", o.seed, "Master seed");
  sub->add_option("--R", o.proposals, "Number of proposals");
  sub->add_option("--S", o.pseudo_samples, "Pseudo-samples per proposal (even)");
  sub->add_option("--alpha", o.alphas, "Region alpha (region) or 1 - level (studies)")
      ->delimiter(',');
  sub->add_option("--rule", o.rule, "alpha-m | equitail | auto");
  sub->add_option("--model", o.model, "logistic | mvt | mixture | ricker | gaussian");
  sub->add_option("--support", o.support, "Proposal support lo:hi[,lo:hi...]");
  sub->add_option("--workers", o.workers, "Worker threads (results do not depend on it)")
      ->check(CLI::PositiveNumber);
  sub->add_option("--out-dir", o.out_dir, "Output directory (default $BOXCD_OUT_DIR or .)");
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Box confidence depth: simulation-based confidence regions", "boxcd"};
  app.set_version_flag("--version", kToolVersion);
  app.require_subcommand(1);

  Options opts;
  const std::map<std::string, std::pair<std::string, std::function<int(Context&)>>> commands{
      {"simulate", {"Simulate an observed dataset at theta0", cmd_simulate}},
      {"sample", {"Run the box sampler and write accepted draws", cmd_sample}},
      {"region", {"Fit the depth surface and export confidence regions", cmd_region}},
      {"coverage", {"Replicated coverage study (with LRT baseline when available)", cmd_coverage}},
      {"lrt", {"Likelihood-ratio coverage baseline only", cmd_lrt}},
      {"lengths", {"Mean interval lengths for a scalar model", cmd_lengths}},
      {"scaling", {"Accepted counts across sample size and S", cmd_scaling}},
      {"variability", {"Depth-curve variability across reruns", cmd_variability}},
      {"abc-compare", {"Acceptance-probability decay in the summary dimension", cmd_abc_compare}},
      {"median", {"Median-unbiasedness of the point estimate", cmd_median}},
  };
  for (const auto& [name, entry] : commands) {
    auto* sub = app.add_subcommand(name, entry.first);
    add_common_options(sub, opts);
    if (name == "region") sub->add_option("--draws", opts.draws, "Accepted-draws CSV");
  }

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitConfig;
  }

  std::string command;
  for (const auto* sub : app.get_subcommands()) command = sub->get_name();

  try {
    const auto start = std::chrono::steady_clock::now();
    fs::path out_dir = opts.out_dir;
    if (out_dir.empty()) {
      const char* env = std::getenv("BOXCD_OUT_DIR");
      out_dir = env && *env ? fs::path(env) : fs::path(".");
    }
    Context ctx{command, resolve_config(command, opts), opts.workers, out_dir, out, err, {}};
    std::error_code ec;
    fs::create_directories(ctx.out_dir, ec);
    if (ec) throw IoError("cannot create output directory '" + ctx.out_dir.string() + "'");

    const int code = commands.at(command).second(ctx);
    const double wall =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    write_manifest(ctx, wall);
    return code;
  } catch (const ConfigError& e) {
    err << "error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const IoError& e) {
    err << "I/O error: " << e.what() << "\n";
    return kExitIo;
  } catch (const fs::filesystem_error& e) {
    err << "I/O error: " << e.what() << "\n";
    return kExitIo;
  } catch (const ContractViolation& e) {
    err << "error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const UnsupportedCapability& e) {
    err << "error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const TrialError& e) {
    err << "numerical error: " << e.what() << "\n";
    return kExitNumerical;
  } catch (const NumericalError& e) {
    err << "numerical error: " << e.what() << "\n";
    return kExitNumerical;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitNumerical;
  }
}

}  // namespace boxcd
