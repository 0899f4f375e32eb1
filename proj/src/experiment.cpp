#include "ticketforge/experiment.hpp"

#include <atomic>
#include <cerrno>
#include <cstring>
#include <fcntl.h>
#include <fmt/format.h>
#include <fmt/ostream.h>
#include <fstream>
#include <mutex>
#include <set>
#include <thread>
#include <unistd.h>

#include "ticketforge/checkpoint.hpp"
#include "ticketforge/error.hpp"
#include "ticketforge/report.hpp"
#include "ticketforge/ticket_search.hpp"

namespace ticketforge {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

Split images_to_split(const std::vector<std::uint8_t>& pixels, const std::vector<std::uint8_t>& labels,
                      std::size_t dim, double mean, double stddev) {
  Split s;
  s.dim = dim;
  s.x.resize(labels.size() * dim);
  for (std::size_t i = 0; i < s.x.size(); ++i) {
    s.x[i] = (static_cast<double>(pixels[i]) / 255.0 - mean) / stddev;
  }
  s.y.assign(labels.begin(), labels.end());
  return s;
}

class DirectoryLock {
 public:
  explicit DirectoryLock(fs::path path) : path_(std::move(path)) {
    fd_ = ::open(path_.c_str(), O_CREAT | O_EXCL | O_WRONLY, 0644);
    if (fd_ < 0) {
      throw Error(fmt::format("cannot lock {}: {} (another run active? remove the file if stale)",
                              path_.string(), std::strerror(errno)));
    }
    const std::string pid = std::to_string(::getpid()) + "\n";
    (void)!::write(fd_, pid.data(), pid.size());
  }
  DirectoryLock(const DirectoryLock&) = delete;
  DirectoryLock& operator=(const DirectoryLock&) = delete;
  ~DirectoryLock() {
    ::close(fd_);
    std::error_code ec;
    fs::remove(path_, ec);
  }

 private:
  fs::path path_;
  int fd_ = -1;
};

class AppendLog {
 public:
  explicit AppendLog(const fs::path& path) {
    fd_ = ::open(path.c_str(), O_CREAT | O_WRONLY | O_APPEND, 0644);
    if (fd_ < 0) throw Error(fmt::format("cannot open {}: {}", path.string(), std::strerror(errno)));
  }
  AppendLog(const AppendLog&) = delete;
  AppendLog& operator=(const AppendLog&) = delete;
  ~AppendLog() { ::close(fd_); }

  void append_line(const std::string& line) {
    const std::string data = line + "\n";
    std::size_t done = 0;
    while (done < data.size()) {
      const ssize_t n = ::write(fd_, data.data() + done, data.size() - done);
      if (n < 0) {
        if (errno == EINTR) continue;
        throw Error(fmt::format("write failed: {}", std::strerror(errno)));
      }
      done += static_cast<std::size_t>(n);
    }
    ::fsync(fd_);
  }

 private:
  int fd_ = -1;
};

// Drops a torn final line left by a crash mid-append; earlier lines must parse.
void repair_tail(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::string content((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  in.close();
  if (content.empty() || content.back() == '\n') return;
  const std::size_t keep = content.rfind('\n') == std::string::npos ? 0 : content.rfind('\n') + 1;
  fs::resize_file(path, keep);
}

struct Task {
  const ArchitectureConfig* arch;
  std::size_t index;
};

}  // namespace

DatasetSplits provision_dataset(const DatasetSpec& spec, const RngState& rng) {
  DatasetSplits out;
  RngState split_rng = rng.fork("split");
  switch (spec.source) {
    case DataSource::kTwoMoons:
    case DataSource::kGaussianBlobs: {
      RngState gen = rng.fork("generate");
      Split all = spec.source == DataSource::kTwoMoons
                      ? make_two_moons(spec.n_samples, spec.noise, gen)
                      : make_gaussian_blobs(spec.n_samples, spec.dim, spec.centers,
                                            spec.cluster_std, spec.center_box, gen);
      out = split_dataset(std::move(all), spec.test_fraction, spec.val_fraction, split_rng);
      break;
    }
    case DataSource::kMnistIdx: {
      const fs::path dir = spec.data_dir;
      const std::size_t cap = spec.max_train;
      const RawImages train_img = read_idx_images(dir / "train-images-idx3-ubyte", cap);
      const auto train_lbl = read_idx_labels(dir / "train-labels-idx1-ubyte", cap);
      const RawImages test_img = read_idx_images(dir / "t10k-images-idx3-ubyte", spec.max_test);
      const auto test_lbl = read_idx_labels(dir / "t10k-labels-idx1-ubyte", spec.max_test);
      if (train_img.count != train_lbl.size() || test_img.count != test_lbl.size()) {
        throw FormatError("MNIST image and label counts differ", 0);
      }
      if (train_img.shape != Shape{1, 28, 28}) {
        throw FormatError(fmt::format("MNIST images are {}, expected [1,28,28]",
                                      shape_string(train_img.shape)),
                          8);
      }
      out.train = images_to_split(train_img.pixels, train_lbl, 784, spec.norm_mean, spec.norm_std);
      out.test = images_to_split(test_img.pixels, test_lbl, 784, spec.norm_mean, spec.norm_std);
      carve_validation(out.train, out.val, spec.val_fraction, split_rng);
      break;
    }
    case DataSource::kCifar10Binary: {
      const fs::path dir = spec.data_dir;
      Cifar10Batch train;
      for (int b = 1; b <= 5; ++b) {
        const std::size_t have = train.labels.size();
        if (spec.max_train != 0 && have >= spec.max_train) break;
        const Cifar10Batch part = read_cifar10_batch(
            dir / fmt::format("data_batch_{}.bin", b), spec.max_train == 0 ? 0 : spec.max_train - have);
        train.labels.insert(train.labels.end(), part.labels.begin(), part.labels.end());
        train.pixels.insert(train.pixels.end(), part.pixels.begin(), part.pixels.end());
      }
      const Cifar10Batch test = read_cifar10_batch(dir / "test_batch.bin", spec.max_test);
      out.train = images_to_split(train.pixels, train.labels, kCifarPixelBytes, spec.norm_mean,
                                  spec.norm_std);
      out.test = images_to_split(test.pixels, test.labels, kCifarPixelBytes, spec.norm_mean,
                                 spec.norm_std);
      carve_validation(out.train, out.val, spec.val_fraction, split_rng);
      break;
    }
  }
  if (spec.source == DataSource::kTwoMoons || spec.source == DataSource::kGaussianBlobs) {
    truncate(out.train, spec.max_train);
    truncate(out.test, spec.max_test);
  }
  out.input_shape = spec.input_shape();
  out.num_classes = spec.num_classes();
  return out;
}

ExperimentResult run_experiment(const ExperimentConfig& cfg, const RunOptions& options) {
  ExperimentResult result;
  result.dir = cfg.output_dir;
  fs::create_directories(cfg.output_dir);
  DirectoryLock lock(cfg.output_dir / ".lock");

  const std::string digest = config_digest(cfg);
  const fs::path config_path = cfg.output_dir / "config.json";
  if (fs::exists(config_path)) {
    std::ifstream in(config_path);
    json existing;
    try {
      existing = json::parse(in);
    } catch (const json::parse_error& e) {
      throw FormatError(fmt::format("{}: {}", config_path.string(), e.what()), e.byte);
    }
    if (existing.value("config_digest", "") != digest) {
      throw ConfigError(fmt::format("{} holds results of config {}, this config is {}",
                                    cfg.output_dir.string(), existing.value("config_digest", "?"),
                                    digest));
    }
  }
  {
    std::ofstream out(config_path, std::ios::trunc);
    out << json{{"config_digest", digest}, {"config", to_json(cfg)}}.dump(2) << '\n';
  }

  const fs::path runs_path = cfg.output_dir / "runs.jsonl";
  if (!options.resume && fs::exists(runs_path)) {
    fs::rename(runs_path, cfg.output_dir / "runs.jsonl.bak");
  }
  std::set<std::string> done;
  if (fs::exists(runs_path)) {
    repair_tail(runs_path);
    for (const RunLine& line : read_runs_jsonl(runs_path)) {
      if (line.config_digest != digest) {
        throw ConfigError(fmt::format("{} contains run {} from config {}", runs_path.string(),
                                      line.run.run_id, line.config_digest));
      }
      done.insert(line.run.run_id);
    }
  }

  const RngState master(cfg.master_seed);
  const DatasetSplits data = provision_dataset(cfg.dataset, master.fork("dataset"));

  std::vector<Task> tasks;
  for (const auto& arch : cfg.architectures) {
    for (std::size_t i = 0; i < cfg.n_runs; ++i) {
      ++result.n_total;
      if (done.count(fmt::format("{}/{}", arch.id, i))) {
        ++result.skipped;
      } else {
        tasks.push_back({&arch, i});
      }
    }
  }

  std::size_t jobs = options.jobs.value_or(cfg.jobs);
  if (jobs == 0) jobs = std::max(1u, std::thread::hardware_concurrency());
  jobs = std::min(jobs, std::max<std::size_t>(tasks.size(), 1));

  AppendLog log(runs_path);
  std::mutex mu;
  std::atomic<std::size_t> next{0};
  std::size_t finished = 0;
  auto worker = [&] {
    for (std::size_t t = next++; t < tasks.size(); t = next++) {
      const Task& task = tasks[t];
      const ArchitectureConfig& arch = *task.arch;
      const std::string run_id = fmt::format("{}/{}", arch.id, task.index);
      RngState probe_rng = master.fork("probe");
      const TrajectoryProbe probe = make_trajectory_probe(
          arch.spec, cfg.search.probe_points, cfg.search.probe_radius, probe_rng);
      const RngState run_rng(derive_run_seed(cfg.master_seed, task.index));

      StageObserver observer;
      if (cfg.save_checkpoints) {
        observer = [&](const StageEvent& ev) {
          save_checkpoint(cfg.output_dir / "checkpoints" / arch.id /
                              fmt::format("run{}_stage{}.json", task.index, ev.k),
                          Checkpoint{arch.spec, ev.trained, ev.mask, run_id, ev.k});
        };
      }
      RunLine line;
      try {
        line.run = run_ticket_search(arch.spec, data, cfg.search, probe, run_rng, observer);
      } catch (const std::exception& e) {
        line.run = RunRecord{};
        line.run.seed = run_rng.seed();
        line.run.K = cfg.search.K;
        line.run.status = RunStatus::kFailed;
        line.run.error = e.what();
      }
      line.run.run_id = run_id;
      line.run.arch = arch.id;
      line.config_digest = digest;
      line.run_index = task.index;
      line.param_count = parameter_count(arch.spec);

      const std::lock_guard<std::mutex> guard(mu);
      log.append_line(run_to_json(line).dump());
      ++result.executed;
      ++finished;
      if (line.run.status == RunStatus::kFailed) ++result.failed;
      if (options.log != nullptr) {
        fmt::print(*options.log, "[{}/{}] {} {}\n", finished, tasks.size(), run_id,
                   line.run.status == RunStatus::kComplete ? "complete" : "FAILED: " + line.run.error);
      }
    }
  };
  {
    std::vector<std::jthread> pool;
    for (std::size_t w = 0; w + 1 < jobs; ++w) pool.emplace_back(worker);
    worker();
  }

  const auto all = read_runs_jsonl(runs_path);
  result.all_failed = std::none_of(all.begin(), all.end(),
                                   [](const RunLine& l) { return l.run.complete(); });
  if (!result.all_failed) {
    write_summary(cfg.output_dir);
    emit_reports(cfg.output_dir);
  }
  return result;
}

}  // namespace ticketforge
