#include "vspec/cli.hpp"

#include <atomic>
#include <csignal>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "vspec/achem.hpp"
#include "vspec/dataset.hpp"
#include "vspec/errors.hpp"
#include "vspec/metrics.hpp"
#include "vspec/model_io.hpp"
#include "vspec/neuralnet.hpp"
#include "vspec/service.hpp"
#include "vspec/spectral_model.hpp"

namespace vspec {

using nlohmann::ordered_json;
namespace fs = std::filesystem;

namespace {

std::ofstream open_out(const fs::path& p) {
  std::ofstream out(p, std::ios::binary);
  if (!out) throw FormatError("cannot write " + p.string());
  return out;
}

std::vector<double> parse_values(const std::string& text) {
  std::vector<double> v;
  std::string token;
  std::istringstream in(text);
  std::size_t pos = 0;
  while (in >> std::ws && !in.eof()) {
    std::getline(in, token, ',');
    std::istringstream tok(token);
    std::string piece;
    while (tok >> piece) {
      ++pos;
      std::size_t used = 0;
      double d = 0.0;
      try {
        d = std::stod(piece, &used);
      } catch (const std::exception&) {
        used = 0;
      }
      if (used != piece.size()) throw DomainError("value " + std::to_string(pos) + " ('" + piece + "') is not a number");
      v.push_back(d);
    }
  }
  return v;
}

struct GenDataOpts {
  GenerationSpec spec;
  std::string out;
  std::string bands;
};

struct SplitOpts {
  std::string in;
  std::string out_dir;
  std::uint64_t seed = 42;
  std::string norm_stats = "corpus";
};

struct TrainOpts {
  std::string train, test, norm, out, trace;
  std::vector<std::size_t> hidden{70};
  bool no_jump = false;
  std::string hidden_activation = "logistic";
  std::string output_activation = "logistic";
  TrainingConfig config;
};

struct AchemOpts {
  std::string train, test, validation, norm, out, history;
  std::string direction = "dual";
  std::string metric = "pearson";
  ReactorConfig reactor;
  EvaluationBudget budget;
};

struct EvalOpts {
  std::string model, data, csv, plot;
};

struct PredictOpts {
  std::string model, values;
};

struct ServeOpts {
  std::string addr, model_dir, static_dir;
};

void add_gen_data(CLI::App& app, GenDataOpts& o) {
  auto& s = o.spec;
  app.add_option("--out", o.out, "Output sample CSV")->required();
  app.add_option("--count", s.count, "Number of records")->capture_default_str();
  app.add_option("--seed", s.seed, "RNG seed")->capture_default_str();
  app.add_option("--noise", s.noise_sigma, "Gaussian absorbance noise sigma")->capture_default_str();
  app.add_option("--co-min", s.co.min_M, "Minimum [Co] (M)")->capture_default_str();
  app.add_option("--co-max", s.co.max_M, "Maximum [Co] (M)")->capture_default_str();
  app.add_option("--ni-min", s.ni.min_M, "Minimum [Ni] (M)")->capture_default_str();
  app.add_option("--ni-max", s.ni.max_M, "Maximum [Ni] (M)")->capture_default_str();
  app.add_option("--co-levels", s.co.levels, "Discrete [Co] standards (overrides --co-min/--co-max)")->delimiter(',');
  app.add_option("--ni-levels", s.ni.levels, "Discrete [Ni] standards (overrides --ni-min/--ni-max)")->delimiter(',');
  app.add_option("--start-nm", s.grid.start_nm, "First wavelength (nm)")->capture_default_str();
  app.add_option("--end-nm", s.grid.end_nm, "Last wavelength (nm)")->capture_default_str();
  app.add_option("--step-nm", s.grid.step_nm, "Wavelength spacing (nm)")->capture_default_str();
  app.add_option("--path-length", s.path_length_cm, "Cuvette path length (cm)")->capture_default_str();
  app.add_option("--bands", o.bands, "Band-model config file (default: built-in Ni 394 nm / Co 510 nm bands)");
}

int cmd_gen_data(GenDataOpts& o, std::ostream& out) {
  if (!o.bands.empty()) o.spec.spectra = load_spectra(o.bands);
  const auto set = generate_dataset(o.spec);
  write_samples_csv(fs::path(o.out), set);
  out << "wrote " << set.size() << " records x " << set.grid.count() << " wavelengths to " << o.out << " (seed "
      << o.spec.seed << ")\n";
  return kExitOk;
}

void add_split(CLI::App& app, SplitOpts& o) {
  app.add_option("--in", o.in, "Input sample CSV")->required();
  app.add_option("--out-dir", o.out_dir, "Directory for train.csv, test.csv, validation.csv, norm.json")->required();
  app.add_option("--seed", o.seed, "Shuffle seed")->capture_default_str();
  app.add_option("--norm-stats", o.norm_stats, "Normalization statistics source: corpus or train")
      ->check(CLI::IsMember({"corpus", "train"}))
      ->capture_default_str();
}

int cmd_split(const SplitOpts& o, std::ostream& out) {
  const auto corpus = read_samples_csv(fs::path(o.in));
  const auto parts = split(corpus, o.seed);
  const auto norm = fit_normalization(o.norm_stats == "train" ? parts.train : corpus);
  const fs::path dir(o.out_dir);
  fs::create_directories(dir);
  write_samples_csv(dir / "train.csv", parts.train);
  write_samples_csv(dir / "test.csv", parts.test);
  write_samples_csv(dir / "validation.csv", parts.validation);
  write_json_file(dir / "norm.json", ordered_json(norm));
  write_json_file(dir / "split.json", {{"seed", o.seed},
                                       {"source", fs::path(o.in).filename().string()},
                                       {"norm_stats", o.norm_stats},
                                       {"train", parts.train.size()},
                                       {"test", parts.test.size()},
                                       {"validation", parts.validation.size()}});
  out << "split " << corpus.size() << " records into " << parts.train.size() << "/" << parts.test.size() << "/"
      << parts.validation.size() << " (seed " << o.seed << ")\n";
  return kExitOk;
}

void add_train(CLI::App& app, TrainOpts& o) {
  auto& c = o.config;
  app.add_option("--train", o.train, "Training CSV (raw units)")->required();
  app.add_option("--test", o.test, "Test CSV used for early stopping")->required();
  app.add_option("--norm", o.norm, "Normalization JSON written by split")->required();
  app.add_option("--out", o.out, "Output model JSON")->required();
  app.add_option("--trace", o.trace, "Per-epoch trace CSV");
  app.add_option("--hidden", o.hidden, "Hidden layer widths, comma separated")->delimiter(',')->capture_default_str();
  app.add_flag("--no-jump", o.no_jump, "Disable input->output jump connections");
  app.add_option("--hidden-activation", o.hidden_activation, "logistic, tanh or identity")->capture_default_str();
  app.add_option("--output-activation", o.output_activation, "logistic, tanh or identity")->capture_default_str();
  app.add_option("--lr", c.learning_rate, "Learning rate")->capture_default_str();
  app.add_option("--momentum", c.momentum, "Momentum")->capture_default_str();
  app.add_option("--max-epochs", c.max_epochs, "Epoch budget")->capture_default_str();
  app.add_option("--patience", c.patience, "Epochs without test improvement before stopping")->capture_default_str();
  app.add_option("--seed", c.seed, "Initialization and shuffle seed")->capture_default_str();
}

void write_trace_csv(std::ostream& out, const TrainingTrace& t, const TrainingConfig& c) {
  out << "# seed=" << c.seed << " learning_rate=" << format_double(c.learning_rate)
      << " momentum=" << format_double(c.momentum) << " best_epoch=" << t.best_epoch
      << " stopped=" << to_string(t.stopped_reason) << '\n';
  out << "epoch,train_mse,test_mse\n";
  for (std::size_t e = 0; e < t.epochs(); ++e)
    out << e + 1 << ',' << format_double(t.train_mse[e]) << ',' << format_double(t.test_mse[e]) << '\n';
}

int cmd_train(const TrainOpts& o, Direction direction, std::ostream& out) {
  const auto norm = read_json_file(o.norm).get<NormalizationParams>();
  const auto train_raw = read_samples_csv(fs::path(o.train));
  const auto test_raw = read_samples_csv(fs::path(o.test));
  if (!(train_raw.grid == test_raw.grid)) throw DomainError("train and test CSVs use different grids");
  const auto train_data = make_training_data(apply_normalization(train_raw, norm), direction);
  const auto test_data = make_training_data(apply_normalization(test_raw, norm), direction);

  Model model;
  model.direction = direction;
  model.grid = train_raw.grid;
  model.normalization = norm;
  model.topology.input_count = train_data.input_count;
  model.topology.output_count = train_data.output_count;
  model.topology.hidden_widths = o.hidden;
  model.topology.jump_connections = !o.no_jump;
  model.topology.hidden_activation = activation_from_string(o.hidden_activation);
  model.topology.output_activation = activation_from_string(o.output_activation);

  std::optional<TrainingResult> result;
  try {
    result = train(model.topology, train_data, test_data, o.config);
  } catch (const TrainingError& e) {
    if (!o.trace.empty()) {
      auto f = open_out(o.trace);
      write_trace_csv(f, e.trace(), o.config);
    }
    throw;
  }
  model.weights = std::move(result->weights);
  const auto& t = result->trace;
  model.provenance = {{"seed", o.config.seed},
                      {"learning_rate", o.config.learning_rate},
                      {"momentum", o.config.momentum},
                      {"max_epochs", o.config.max_epochs},
                      {"patience", o.config.patience},
                      {"epochs_run", t.epochs()},
                      {"best_epoch", t.best_epoch},
                      {"best_test_mse", t.test_mse[t.best_epoch - 1]},
                      {"stopped_reason", to_string(t.stopped_reason)},
                      {"train_records", train_data.size()},
                      {"test_records", test_data.size()}};
  save_model(o.out, model);
  if (!o.trace.empty()) {
    auto f = open_out(o.trace);
    write_trace_csv(f, t, o.config);
  }
  out << to_string(direction) << " model " << model.topology.input_count << "-";
  for (auto w : model.topology.hidden_widths) out << w << "-";
  out << model.topology.output_count << (model.topology.jump_connections ? " (jump)" : "") << ": " << t.epochs()
      << " epochs, best epoch " << t.best_epoch << " test MSE " << format_double(t.test_mse[t.best_epoch - 1])
      << ", stopped by " << to_string(t.stopped_reason) << "\n";
  return kExitOk;
}

void add_achem(CLI::App& app, AchemOpts& o) {
  auto& r = o.reactor;
  auto& b = o.budget;
  app.add_option("--train", o.train, "Training CSV")->required();
  app.add_option("--test", o.test, "Test CSV (early stopping)")->required();
  app.add_option("--validation", o.validation, "Validation CSV (fitness)")->required();
  app.add_option("--norm", o.norm, "Normalization JSON")->required();
  app.add_option("--out", o.out, "Best-molecule JSON")->required();
  app.add_option("--history", o.history, "Per-cycle history CSV");
  app.add_option("--direction", o.direction, "forward or dual")->check(CLI::IsMember({"forward", "dual"}))->capture_default_str();
  app.add_option("--metric", o.metric, "Fitness: pearson (mean validation r) or neg-mse")
      ->check(CLI::IsMember({"pearson", "neg-mse"}))
      ->capture_default_str();
  app.add_option("--population", r.population_size, "Population size")->capture_default_str();
  app.add_option("--max-cycles", r.max_cycles, "Cycle budget")->capture_default_str();
  app.add_option("--consensus", r.consensus_fraction, "Consensus fraction that ends the run")->capture_default_str();
  app.add_option("--collisions", r.collisions_per_cycle, "Reactions per cycle")->capture_default_str();
  app.add_option("--wall-prob", r.wall_collision_probability, "Probability a reaction is a wall collision")->capture_default_str();
  app.add_option("--max-layers", r.bounds.max_layers, "Maximum hidden layers")->capture_default_str();
  app.add_option("--max-width", r.bounds.max_width, "Maximum hidden width")->capture_default_str();
  app.add_option("--threads", r.threads, "Parallel evaluations (0 = hardware)")->capture_default_str();
  app.add_option("--seed", r.seed, "Reactor seed")->capture_default_str();
  app.add_option("--epochs", b.max_epochs, "Per-molecule epoch budget")->capture_default_str();
  app.add_option("--patience", b.patience, "Per-molecule early-stopping patience")->capture_default_str();
  app.add_option("--training-seed", b.training_seed, "Seed for every molecule's training run")->capture_default_str();
}

int cmd_achem(AchemOpts& o, std::ostream& out) {
  const auto norm = read_json_file(o.norm).get<NormalizationParams>();
  SplitSet split{apply_normalization(read_samples_csv(fs::path(o.train)), norm),
                 apply_normalization(read_samples_csv(fs::path(o.test)), norm),
                 apply_normalization(read_samples_csv(fs::path(o.validation)), norm)};
  o.budget.metric = o.metric == "neg-mse" ? FitnessMetric::NegativeMse : FitnessMetric::MeanPearson;
  const auto direction = direction_from_string(o.direction);
  const auto result = run_reactor(o.reactor, split, direction, o.budget);

  auto best = molecule_to_json(result.best);
  ordered_json doc = {{"best", best},
                      {"termination", to_string(result.termination)},
                      {"cycles", result.history.back().cycle},
                      {"evaluations", result.evaluations},
                      {"direction", o.direction},
                      {"metric", o.metric},
                      {"seed", o.reactor.seed},
                      {"training_seed", o.budget.training_seed}};
  write_json_file(o.out, doc);
  if (!o.history.empty()) {
    auto f = open_out(o.history);
    f << "# seed=" << o.reactor.seed << " training_seed=" << o.budget.training_seed << '\n';
    write_history_csv(f, result);
  }
  out << "best structure: " << result.best.hidden_layer_count() << " hidden layer(s) [";
  for (std::size_t i = 0; i < result.best.widths.size(); ++i) out << (i ? "," : "") << result.best.widths[i];
  out << "], jump=" << result.best.jump << ", lr=" << format_double(result.best.learning_rate)
      << ", momentum=" << format_double(result.best.momentum) << ", fitness=" << format_double(*result.best.fitness)
      << " (" << to_string(result.termination) << " after " << result.history.back().cycle << " cycles)\n";
  return kExitOk;
}

void add_eval(CLI::App& app, EvalOpts& o) {
  app.add_option("--model", o.model, "Model JSON")->required();
  app.add_option("--data", o.data, "Sample CSV (raw units)")->required();
  app.add_option("--out", o.csv, "Report CSV (label,r)");
  app.add_option("--plot", o.plot, "Two-column plot file");
}

int cmd_eval(const EvalOpts& o, std::ostream& out) {
  const auto model = load_model(o.model);
  const auto report = evaluate_model(model, read_samples_csv(fs::path(o.data)));
  write_report_table(out, report);
  if (!o.csv.empty()) {
    auto f = open_out(o.csv);
    write_report_csv(f, report);
  }
  if (!o.plot.empty()) {
    auto f = open_out(o.plot);
    write_report_plot(f, report);
  }
  return kExitOk;
}

void add_predict(CLI::App& app, PredictOpts& o) {
  app.add_option("--model", o.model, "Model JSON")->required();
  app.add_option("--values", o.values,
                 "Inline input values, comma or space separated: co_M,ni_M for a dual model, "
                 "one absorbance per wavelength for a forward model")
      ->required();
}

int cmd_predict(const PredictOpts& o, std::ostream& out) {
  const auto model = load_model(o.model);
  const auto x = parse_values(o.values);
  const auto y = predict(model, x);
  if (model.direction == Direction::Forward) {
    out << "co_M " << format_double(y[0]) << "\nni_M " << format_double(y[1]) << '\n';
  } else {
    for (std::size_t i = 0; i < y.size(); ++i) out << wavelength_label(model.grid.at(i)) << ' ' << format_double(y[i]) << '\n';
  }
  return kExitOk;
}

void add_serve(CLI::App& app, ServeOpts& o) {
  app.add_option("--addr", o.addr, "Bind address host:port")->envname("SPECBENCH_ADDR")->default_val("127.0.0.1:8080");
  app.add_option("--model-dir", o.model_dir, "Directory holding forward.json / dual.json / bands.ini")
      ->envname("SPECBENCH_MODEL_DIR")
      ->default_val("models");
  app.add_option("--static-dir", o.static_dir, "Directory of UI assets served at /");
}

std::atomic<HttpServer*> g_server{nullptr};

extern "C" void handle_stop_signal(int) {
  if (auto* s = g_server.load()) s->stop();
}

int cmd_serve(const ServeOpts& o, std::ostream& out) {
  auto registry = std::make_shared<const ModelRegistry>(ModelRegistry::load(o.model_dir));
  auto service = std::make_shared<const PredictionService>(registry);
  std::optional<fs::path> static_dir;
  if (!o.static_dir.empty()) static_dir = o.static_dir;
  HttpServer server(service, static_dir);
  const auto [host, port] = parse_address(o.addr);
  const int bound = server.bind(host, port);
  if (bound < 0) throw DomainError("cannot bind " + o.addr);
  out << "serving on http://" << host << ":" << bound << " (forward: " << (registry->forward_model() ? "yes" : "no")
      << ", dual: " << (registry->dual_model() ? "yes" : "no") << ")" << std::endl;
  g_server = &server;
  std::signal(SIGINT, handle_stop_signal);
  std::signal(SIGTERM, handle_stop_signal);
  server.listen();
  g_server = nullptr;
  return kExitOk;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Virtual Co/Ni spectrophotometer: simulate, train, search, evaluate, predict, serve", "vspec"};
  app.require_subcommand(1);

  GenDataOpts gen;
  SplitOpts spl;
  TrainOpts trn;
  TrainOpts dual;
  AchemOpts ach;
  EvalOpts evl;
  PredictOpts prd;
  ServeOpts srv;

  add_gen_data(*app.add_subcommand("gen-data", "Generate a synthetic Beer's-law sample CSV"), gen);
  add_split(*app.add_subcommand("split", "Shuffle and cut a CSV into 70/10/20 train/test/validation parts"), spl);
  add_train(*app.add_subcommand("train", "Train the forward model (spectrum -> [Co],[Ni])"), trn);
  add_train(*app.add_subcommand("train-dual", "Train the dual model ([Co],[Ni] -> spectrum)"), dual);
  add_achem(*app.add_subcommand("achem", "Artificial-chemistry search over structures and hyperparameters"), ach);
  add_eval(*app.add_subcommand("eval", "Per-output Pearson r of a model on a CSV"), evl);
  add_predict(*app.add_subcommand("predict", "Run a model on inline values"), prd);
  add_serve(*app.add_subcommand("serve", "Serve the prediction HTTP API"), srv);

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    const auto* sub = app.get_subcommands().front();
    const std::string name = sub->get_name();
    if (name == "gen-data") return cmd_gen_data(gen, out);
    if (name == "split") return cmd_split(spl, out);
    if (name == "train") return cmd_train(trn, Direction::Forward, out);
    if (name == "train-dual") return cmd_train(dual, Direction::Dual, out);
    if (name == "achem") return cmd_achem(ach, out);
    if (name == "eval") return cmd_eval(evl, out);
    if (name == "predict") return cmd_predict(prd, out);
    if (name == "serve") return cmd_serve(srv, out);
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitDomainError;
  }
  err << app.help();
  return kExitUsage;
}

}  // namespace vspec
