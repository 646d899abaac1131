#include <sys/wait.h>
#include <unistd.h>

#include <chrono>
#include <cstdlib>
#include <deque>
#include <fstream>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "json.hpp"
#include "umc/cli/cli.hpp"
#include "umc/dataio/manifest.hpp"
#include "umc/error.hpp"

namespace umc::cli {

namespace fs = std::filesystem;

namespace {

struct Options {
  fs::path config;
  std::optional<fs::path> out;
  std::optional<std::uint64_t> seed;
  int jobs = 1;
  bool force = false;
  bool quiet = false;
  std::optional<fs::path> resume;
  int stop_after = 0;
  std::optional<fs::path> run_dir;
};

void write_file(const fs::path& path, const std::string& text) {
  const fs::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    out << text;
    if (!out) throw DataError("cannot write '" + path.string() + "'");
  }
  fs::rename(tmp, path);
}

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot read '" + path.string() + "'");
  std::stringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

fs::path output_dir(const Options& o) {
  if (o.out) return *o.out;
  const char* root = std::getenv("UMC_OUTPUT_ROOT");
  return fs::path(root && *root ? root : "runs") / o.config.stem();
}

// Creates `dir`, refusing to reuse a non-empty one unless forced.
void prepare_dir(const fs::path& dir, bool force) {
  if (fs::exists(dir) && !fs::is_empty(dir)) {
    if (!force) throw ConfigError("output directory '" + dir.string() + "' exists; pass --force to overwrite");
    fs::remove_all(dir);
  }
  fs::create_directories(dir);
}

Config configure(const Options& o) {
  Config c = load_config(o.config);
  if (o.seed) c.set_seed(*o.seed);
  return c;
}

int train_into(const Config& c, const fs::path& dir, const Options& o) {
  const auto t0 = std::chrono::steady_clock::now();
  const dataio::MultiViewDataset data = load_data(c);
  write_file(dir / "config.resolved.json", to_json(c));
  std::ofstream log(dir / "train.log", o.resume ? std::ios::app : std::ios::trunc);
  trainer::RunControl control;
  control.checkpoint_path = dir / "checkpoint.ckpt";
  control.checkpoint_every = c.run.checkpoint_every;
  control.resume_from = o.resume;
  control.stop_after_epoch = o.stop_after;
  control.on_epoch = [&](const trainer::EpochRecord& r) {
    const std::string line = trainer::format_epoch(r);
    log << line << '\n' << std::flush;
    if (!o.quiet) std::cout << line << '\n' << std::flush;
  };
  const trainer::RunArtifacts art = trainer::train(c.train, data, control);
  write_file(dir / "loss_curve.csv", trainer::loss_curve_csv(art.curve, data));
  if (art.completed) {
    write_file(dir / "metrics.json", art.metrics.to_json());
    write_file(dir / "metrics.csv", art.metrics.to_csv());
    evalkit::export_embeddings(dir / "embeddings.csv", data, art.latents, art.final_assignment.labels);
  }
  const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  nlohmann::json run{{"config_hash", trainer::hash_hex(trainer::config_hash(c.train, data))},
                     {"epochs_completed", art.curve.empty() ? 0 : art.curve.back().epoch},
                     {"completed", art.completed},
                     {"runtime_seconds", seconds}};
  write_file(dir / "run.json", run.dump(2) + "\n");
  if (!o.quiet && art.completed) std::cout << art.metrics.to_csv();
  return kOk;
}

int cmd_generate(const Options& o) {
  const Config c = configure(o);
  if (!c.synthetic) throw ConfigError("config: missing key 'synthetic'");
  const fs::path dir = output_dir(o);
  prepare_dir(dir, o.force);
  dataio::save(dataio::synthesize(c.synthetic->spec, c.synthetic->seed), dir);
  if (!o.quiet) std::cout << "wrote " << dir.string() << '\n';
  return kOk;
}

int cmd_unpair(const Options& o) {
  const Config c = configure(o);
  if (!c.data) throw ConfigError("config: missing key 'data'");
  if (!dataio::read_manifest(c.data->manifest).paired) throw ConfigError("data.manifest is not a paired dataset");
  const fs::path dir = output_dir(o);
  prepare_dir(dir, o.force);
  dataio::save(dataio::unpair(dataio::load_paired(c.data->manifest),
                              {c.data->unpair_seed, c.data->unpair_strategy, c.data->manifest.string()}),
               dir);
  if (!o.quiet) std::cout << "wrote " << dir.string() << '\n';
  return kOk;
}

int cmd_train(const Options& o) {
  const Config c = configure(o);
  const fs::path dir = output_dir(o);
  if (o.resume) {
    fs::create_directories(dir);
  } else {
    prepare_dir(dir, o.force);
  }
  return train_into(c, dir, o);
}

int cmd_eval(const Options& o) {
  if (!o.run_dir) throw ConfigError("eval needs --run <run directory>");
  const fs::path run = *o.run_dir;
  const Config c = parse_config(read_file(run / "config.resolved.json"), run);
  const dataio::MultiViewDataset data = load_data(c);
  const trainer::RunArtifacts art = trainer::evaluate(c.train, data, run / "checkpoint.ckpt");
  const fs::path dir = o.out ? *o.out : run / "eval";
  prepare_dir(dir, o.force);
  write_file(dir / "metrics.json", art.metrics.to_json());
  write_file(dir / "metrics.csv", art.metrics.to_csv());
  evalkit::export_embeddings(dir / "embeddings.csv", data, art.latents, art.final_assignment.labels);
  if (!o.quiet) std::cout << art.metrics.to_csv();
  return kOk;
}

int guarded(const std::function<int()>& body);

int cmd_sweep(const Options& o) {
  const Config base = configure(o);
  const auto grid = sweep_grid(base);
  const fs::path dir = output_dir(o);
  prepare_dir(dir, o.force);
  write_file(dir / "config.resolved.json", to_json(base));

  std::vector<int> status(grid.size(), -1);
  std::deque<std::size_t> pending;
  for (std::size_t i = 0; i < grid.size(); ++i) pending.push_back(i);
  std::map<pid_t, std::size_t> running;
  auto point_dir = [&](std::size_t i) { return dir / ("point" + std::to_string(i)); };

  while (!pending.empty() || !running.empty()) {
    while (!pending.empty() && static_cast<int>(running.size()) < std::max(o.jobs, 1)) {
      const std::size_t i = pending.front();
      pending.pop_front();
      Config c = base;
      c.train.weights = grid[i];
      c.sweep.axes.clear();
      std::cout.flush();
      const pid_t pid = fork();
      if (pid < 0) throw Error("fork failed");
      if (pid == 0) {
        Options child = o;
        child.quiet = true;
        const int code = guarded([&] {
          prepare_dir(point_dir(i), true);
          return train_into(c, point_dir(i), child);
        });
        std::cout.flush();
        std::_Exit(code);
      }
      running[pid] = i;
    }
    int ws = 0;
    const pid_t done = waitpid(-1, &ws, 0);
    if (done < 0) throw Error("waitpid failed");
    auto it = running.find(done);
    if (it == running.end()) continue;
    status[it->second] = WIFEXITED(ws) ? WEXITSTATUS(ws) : 128 + (WIFSIGNALED(ws) ? WTERMSIG(ws) : 0);
    if (!o.quiet) std::cout << "point" << it->second << " exit=" << status[it->second] << '\n';
    running.erase(it);
  }

  std::ostringstream summary;
  summary << "point,lambda1,lambda2,lambda3,lambda4,status,exit_code,nmi,acc,f1\n";
  int worst = kOk;
  for (std::size_t i = 0; i < grid.size(); ++i) {
    const auto& w = grid[i];
    summary << "point" << i << ',' << w.lambda1 << ',' << w.lambda2 << ',' << w.lambda3 << ',' << w.lambda4 << ',';
    const fs::path metrics = point_dir(i) / "metrics.json";
    if (status[i] == 0 && fs::exists(metrics)) {
      const auto& all = evalkit::MetricsReport::from_json(read_file(metrics)).scope("all");
      summary << "ok,0," << all.nmi << ',' << all.acc << ',' << all.f1 << '\n';
    } else {
      summary << "failed," << status[i] << ",,,\n";
      if (worst == kOk) worst = status[i] == 0 ? kNumericError : status[i];
    }
  }
  write_file(dir / "summary.csv", summary.str());
  if (!o.quiet) std::cout << summary.str();
  return worst;
}

int guarded(const std::function<int()>& body) {
  try {
    return body();
  } catch (const NumericError& e) {
    std::cerr << "umc: numeric failure: " << e.what() << '\n';
    return kNumericError;
  } catch (const Error& e) {
    std::cerr << "umc: " << e.what() << '\n';
    return kConfigError;
  } catch (const fs::filesystem_error& e) {
    std::cerr << "umc: " << e.what() << '\n';
    return kConfigError;
  }
}

}  // namespace

int run(int argc, char** argv) {
  CLI::App app{"Unpaired multi-view clustering"};
  app.require_subcommand(1);
  Options o;
  std::uint64_t seed = 0;

  auto common = [&](CLI::App* sub, bool needs_config) {
    auto* c = sub->add_option("--config", o.config, "JSON config file");
    if (needs_config) c->required()->check(CLI::ExistingFile);
    sub->add_option("--out", o.out, "output directory");
    sub->add_option("--seed", seed, "override train.seed");
    sub->add_flag("--force", o.force, "overwrite an existing output directory");
    sub->add_flag("--quiet", o.quiet, "suppress progress output");
  };
  auto* gen = app.add_subcommand("generate", "write a synthetic dataset");
  common(gen, true);
  auto* unp = app.add_subcommand("unpair", "split a paired dataset into an unpaired one");
  common(unp, true);
  auto* tr = app.add_subcommand("train", "train and evaluate one run");
  common(tr, true);
  tr->add_option("--resume", o.resume, "continue from a checkpoint")->check(CLI::ExistingFile);
  tr->add_option("--stop-after", o.stop_after, "stop (with a checkpoint) after this epoch");
  auto* ev = app.add_subcommand("eval", "re-run the final clustering of a finished run");
  common(ev, false);
  ev->add_option("--run", o.run_dir, "run directory")->required()->check(CLI::ExistingDirectory);
  auto* sw = app.add_subcommand("sweep", "grid over the loss weights");
  common(sw, true);
  sw->add_option("--jobs", o.jobs, "parallel runs")->check(CLI::PositiveNumber);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kConfigError;
  }
  for (auto* sub : {gen, unp, tr, ev, sw}) {
    if (sub->parsed() && sub->count("--seed") > 0) o.seed = seed;
  }

  return guarded([&] {
    if (gen->parsed()) return cmd_generate(o);
    if (unp->parsed()) return cmd_unpair(o);
    if (tr->parsed()) return cmd_train(o);
    if (ev->parsed()) return cmd_eval(o);
    return cmd_sweep(o);
  });
}

}  // namespace umc::cli
