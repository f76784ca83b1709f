// Copyright (C) 2026 infaudio contributors
// SPDX-License-Identifier: Apache-2.0
//
// infaudio: command-line front end for the streaming sampler.
//
//   infaudio generate     --mode fifo|batch|concat --frames N [...]
//   infaudio schedule     --preset equal|initial|middle|final|auto [...]
//   infaudio analyze-attn MAP.iaam --buffer B
//   infaudio profile-mem  [--frames 128,1024,16384] [--rss]
//   infaudio stats        STREAM.iafs [--window W | --boundaries i,j,...]
//
// Exit codes: 0 success, 2 usage error, 3 runtime error.

#include <sys/wait.h>
#include <unistd.h>

#include <algorithm>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "infaudio/infaudio.hpp"

namespace {

using namespace infaudio;

constexpr int kExitUsage = 2;
constexpr int kExitRuntime = 3;

/// Flag combination rejected after parsing.
struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct DenoiserFlags {
  std::string kind = "ar1";
  double mu = 0.0;
  double sigma2 = 1.0;
  double rho = 0.9;

  GaussianProcessSpec spec() const {
    return kind == "ar1" ? GaussianProcessSpec::ar1(rho, mu, sigma2) : GaussianProcessSpec::frame_local(mu, sigma2);
  }
};

struct ScheduleFlags {
  std::string preset = "final";
  int M = 1000;
  int base_steps = 0;  // 0: min(250, M)
  int steps = 0;       // equal preset; 0: base steps
  int P = 3;
  std::vector<double> fractions{1.0 / 3, 1.0 / 3, 1.0 / 3};
  double beta_start = 1e-4;
  double beta_end = 2e-2;
  std::string attn;
  std::size_t attn_buffer = 0;

  int base() const { return base_steps > 0 ? base_steps : std::min(250, M); }
  RegionFractions region_fractions() const { return {fractions[0], fractions[1], fractions[2]}; }
  NoiseSchedule noise() const { return NoiseSchedule::linear(M, beta_start, beta_end); }
};

struct ShapeFlags {
  std::size_t channels = 8;
  std::size_t freq_bins = 16;
  FrameShape shape() const { return {channels, freq_bins}; }
};

void add_denoiser_flags(CLI::App* cmd, DenoiserFlags& f) {
  cmd->add_option("--denoiser", f.kind, "GP oracle")
      ->check(CLI::IsMember({"framelocal", "ar1"}))
      ->capture_default_str();
  cmd->add_option("--mu", f.mu, "GP mean")->capture_default_str();
  cmd->add_option("--sigma2", f.sigma2, "GP variance")->check(CLI::PositiveNumber)->capture_default_str();
  cmd->add_option("--rho", f.rho, "AR(1) lag correlation")->check(CLI::Range(0.0, 0.999999))->capture_default_str();
}

void add_schedule_flags(CLI::App* cmd, ScheduleFlags& f, const std::string& preset_flag) {
  cmd->add_option(preset_flag, f.preset, "equal, initial, middle, final or auto")
      ->check(CLI::IsMember({"equal", "initial", "middle", "final", "auto"}))
      ->capture_default_str();
  cmd->add_option("--M", f.M, "diffusion timesteps")->check(CLI::Range(3, 1 << 20))->capture_default_str();
  cmd->add_option("--base-steps", f.base_steps, "equally spaced base for curved presets (default min(250, M))");
  cmd->add_option("--steps", f.steps, "length of the equal preset (default: base steps)");
  cmd->add_option("--P", f.P, "skip factor outside the focused region")->check(CLI::PositiveNumber)->capture_default_str();
  cmd->add_option("--fractions", f.fractions, "initial,middle,final shares")->delimiter(',')->expected(3);
  cmd->add_option("--beta-start", f.beta_start, "first beta")->capture_default_str();
  cmd->add_option("--beta-end", f.beta_end, "last beta")->capture_default_str();
  cmd->add_option("--attn", f.attn, "IAAM attention map for the auto preset")->check(CLI::ExistingFile);
  cmd->add_option("--attn-buffer", f.attn_buffer, "buffer frames the map was captured with")->capture_default_str();
}

void add_shape_flags(CLI::App* cmd, ShapeFlags& f) {
  cmd->add_option("--channels", f.channels, "latent channels C")->check(CLI::PositiveNumber)->capture_default_str();
  cmd->add_option("--freq-bins", f.freq_bins, "reduced frequency bins Fr")->check(CLI::PositiveNumber)->capture_default_str();
}

struct ScheduleChoice {
  TimestepSchedule tsched;
  std::optional<AttentionProfile> profile;
};

ScheduleChoice build_schedule(const ScheduleFlags& f) {
  const RegionFractions fractions = f.region_fractions();
  if (f.preset == "equal") return {equally_spaced(f.M, f.steps > 0 ? f.steps : f.base(), fractions), {}};
  const CurvedPlanConfig cfg{f.M, f.base(), f.P, fractions};
  if (f.preset == "auto") {
    if (f.attn.empty()) throw UsageError("--schedule auto requires --attn MAP.iaam");
    const auto profile = region_scores(load_attention_map(f.attn), f.attn_buffer, fractions);
    return {curved_from_profile(profile, cfg), profile};
  }
  return {curved_schedule(*parse_region(f.preset), cfg), {}};
}

std::string focus_label(const TimestepSchedule& s) {
  return s.focus ? std::string(to_string(*s.focus)) : std::string("none");
}

/// Codes raised only by parameter validation, reported as usage errors.
bool is_parameter_error(Errc code) {
  return code == Errc::InvalidRange || code == Errc::InvalidCount || code == Errc::InvalidFractions ||
         code == Errc::InvalidSkip;
}

// ---------------------------------------------------------------------------

struct GenerateFlags {
  std::string mode = "fifo";
  DenoiserFlags den;
  ScheduleFlags sched;
  ShapeFlags shape;
  long long buffer = -1;
  std::string buffer_mode = "sliding";
  std::size_t frames = 0;
  std::size_t window = 64;
  std::uint64_t seed = 0;
  std::string out = "stream.iafs";
  std::string stats_out;
  std::string pgm;
};

int cmd_generate(const GenerateFlags& g) {
  const auto choice = build_schedule(g.sched);
  const NoiseSchedule noise = g.sched.noise();
  const FrameShape shape = g.shape.shape();
  const GaussianProcessDenoiser den(g.den.spec());
  const SamplerContext ctx{den, noise, shape};

  RunStats stats;
  {
    FrameStreamWriter writer(g.out, shape);
    if (g.mode == "fifo") {
      const std::size_t n = choice.tsched.size();
      const std::size_t b = g.buffer < 0 ? default_buffer_len(n) : static_cast<std::size_t>(g.buffer);
      const FifoConfig cfg{choice.tsched, b,
                           g.buffer_mode == "static" ? BufferMode::Static : BufferMode::Sliding, g.seed};
      stats = generate_stream(g.frames, cfg, ctx, writer);
    } else if (g.mode == "batch") {
      stats = generate_batch(g.frames, choice.tsched, g.seed, ctx, writer);
    } else {
      stats = generate_concat(g.frames, g.window, choice.tsched, g.seed, ctx, writer);
    }
    writer.finalize();
  }

  if (g.stats_out.empty()) {
    write_run_stats_csv(std::cout, stats);
  } else {
    std::ofstream os(g.stats_out);
    write_run_stats_csv(os, stats);
    if (!os) throw Error(Errc::IoError, "cannot write " + g.stats_out);
  }
  if (!g.pgm.empty()) emit_pgm(read_stream(g.out), g.pgm);
  std::cerr << "steps," << choice.tsched.size() << "\nfocus," << focus_label(choice.tsched) << '\n';
  return 0;
}

// ---------------------------------------------------------------------------

struct ScheduleCmdFlags {
  ScheduleFlags sched;
  std::string out;
};

int cmd_schedule(const ScheduleCmdFlags& f) {
  const auto choice = build_schedule(f.sched);
  if (f.out.empty()) {
    write_schedule_csv(std::cout, choice.tsched);
  } else {
    std::ofstream os(f.out);
    write_schedule_csv(os, choice.tsched);
    if (!os) throw Error(Errc::IoError, "cannot write " + f.out);
  }
  std::cerr << "steps," << choice.tsched.size() << "\nfocus," << focus_label(choice.tsched) << '\n';
  if (choice.tsched.focus_tied) std::cerr << "tied,true\n";
  if (choice.tsched.degenerate_profile) std::cerr << "degenerate_profile,true\n";
  return 0;
}

// ---------------------------------------------------------------------------

struct AnalyzeFlags {
  std::string map;
  std::size_t buffer = 0;
  std::vector<double> fractions{1.0 / 3, 1.0 / 3, 1.0 / 3};
  std::string out;
};

int cmd_analyze_attn(const AnalyzeFlags& f) {
  const auto map = load_attention_map(f.map);
  const auto profile = region_scores(map, f.buffer, RegionFractions{f.fractions[0], f.fractions[1], f.fractions[2]});
  const auto decision = recommend_focus(profile);
  if (f.out.empty()) {
    write_attention_report(std::cout, profile, decision);
  } else {
    std::ofstream os(f.out);
    write_attention_report(os, profile, decision);
    if (!os) throw Error(Errc::IoError, "cannot write " + f.out);
  }
  if (decision.tied) std::cerr << "tied,true\n";
  return 0;
}

// ---------------------------------------------------------------------------

struct ProfileFlags {
  DenoiserFlags den{"framelocal"};
  ScheduleFlags sched;
  ShapeFlags shape;
  long long buffer = -1;
  std::vector<std::size_t> fifo_frames{128, 1024, 16384};
  std::vector<std::size_t> batch_frames{128, 256};
  std::uint64_t seed = 0;
  bool rss = false;
  std::string out;
};

MemoryRun profile_once(const ProfileFlags& f, const std::string& mode, std::size_t frames) {
  const auto choice = build_schedule(f.sched);
  const NoiseSchedule noise = f.sched.noise();
  const GaussianProcessDenoiser den(f.den.spec());
  const SamplerContext ctx{den, noise, f.shape.shape()};
  CallbackSink discard([](std::span<const float>) { return true; });
  RunStats stats;
  if (mode == "fifo") {
    const std::size_t n = choice.tsched.size();
    const std::size_t b = f.buffer < 0 ? default_buffer_len(n) : static_cast<std::size_t>(f.buffer);
    stats = generate_stream(frames, {choice.tsched, b, BufferMode::Sliding, f.seed}, ctx, discard);
  } else {
    stats = generate_batch(frames, choice.tsched, f.seed, ctx, discard);
  }
  return {mode, frames, stats.peak_bytes, std::nullopt};
}

/// Runs one profile in a child process so VmHWM reflects that run alone.
MemoryRun profile_in_child(const ProfileFlags& f, const std::string& mode, std::size_t frames) {
  int fds[2];
  if (pipe(fds) != 0) throw Error(Errc::IoError, "pipe failed");
  const pid_t pid = fork();
  if (pid < 0) throw Error(Errc::IoError, "fork failed");
  if (pid == 0) {
    close(fds[0]);
    std::size_t payload[2] = {0, 0};
    try {
      const auto run = profile_once(f, mode, frames);
      payload[0] = run.peak_bytes;
      payload[1] = process_peak_rss_bytes().value_or(0);
    } catch (...) {
      _exit(1);
    }
    const bool ok = write(fds[1], payload, sizeof payload) == static_cast<ssize_t>(sizeof payload);
    _exit(ok ? 0 : 1);
  }
  close(fds[1]);
  std::size_t payload[2] = {0, 0};
  const ssize_t got = read(fds[0], payload, sizeof payload);
  close(fds[0]);
  int status = 0;
  waitpid(pid, &status, 0);
  if (got != static_cast<ssize_t>(sizeof payload) || !WIFEXITED(status) || WEXITSTATUS(status) != 0)
    throw Error(Errc::IoError, "profiling child failed");
  MemoryRun run{mode, frames, payload[0], std::nullopt};
  if (payload[1] > 0) run.rss_peak_bytes = payload[1];
  return run;
}

int cmd_profile_mem(const ProfileFlags& f) {
  std::vector<MemoryRun> runs;
  for (const auto& [mode, list] : {std::pair{std::string("fifo"), f.fifo_frames},
                                   std::pair{std::string("batch"), f.batch_frames}})
    for (std::size_t n : list) runs.push_back(f.rss ? profile_in_child(f, mode, n) : profile_once(f, mode, n));
  const auto report = memory_report(std::move(runs));
  if (f.out.empty()) {
    write_memory_csv(std::cout, report);
  } else {
    std::ofstream os(f.out);
    write_memory_csv(os, report);
    if (!os) throw Error(Errc::IoError, "cannot write " + f.out);
  }
  return 0;
}

// ---------------------------------------------------------------------------

struct StatsFlags {
  std::string stream;
  DenoiserFlags den;
  std::size_t window = 0;
  std::vector<std::size_t> boundaries;
  std::size_t max_lag = 8;
  std::string out;
};

int cmd_stats(const StatsFlags& f) {
  const auto stream = read_stream(f.stream);
  const auto spec = f.den.spec();
  spec.validate(stream.shape.freq_bins);
  std::vector<std::size_t> boundaries = f.boundaries;
  if (f.window > 0)
    for (std::size_t b = f.window; b < stream.frame_count(); b += f.window) boundaries.push_back(b);
  const auto report = stream_stats(stream, spec, boundaries, f.max_lag);
  if (f.out.empty()) {
    write_stats_csv(std::cout, report);
  } else {
    std::ofstream os(f.out);
    write_stats_csv(os, report);
    if (!os) throw Error(Errc::IoError, "cannot write " + f.out);
  }
  return 0;
}

// CLI11 only reads config files on the root app, so a subcommand's
// --config is expanded here into flags placed before the user's own.
// Keys already given on the command line are skipped.
std::vector<std::string> expand_config(const CLI::App& app, std::vector<std::string> args) {
  if (args.empty()) return args;
  const CLI::App* sub = nullptr;
  for (const auto* s : app.get_subcommands({}))
    if (s->get_name() == args[0]) sub = s;
  if (sub == nullptr) return args;

  std::string path;
  auto given = [&](const std::string& flag) {
    return std::any_of(args.begin() + 1, args.end(), [&](const std::string& a) {
      return a == flag || a.rfind(flag + "=", 0) == 0;
    });
  };
  for (std::size_t i = 1; i < args.size(); ++i) {
    if (args[i] == "--config" && i + 1 < args.size()) path = args[i + 1];
    if (args[i].rfind("--config=", 0) == 0) path = args[i].substr(9);
  }
  if (path.empty()) return args;

  std::vector<std::string> injected;
  for (const auto& item : CLI::ConfigINI().from_file(path)) {
    if (item.name == "++" || item.name == "--") continue;  // section markers
    if (!item.parents.empty() && item.parents != std::vector<std::string>{sub->get_name()})
      throw CLI::ConfigError("config key " + item.fullname() + " does not belong to " + sub->get_name());
    const std::string flag = "--" + item.name;
    const CLI::Option* opt = sub->get_option_no_throw(flag);
    if (opt == nullptr || item.name == "config") throw CLI::ConfigError("unknown config key " + item.name);
    if (given(flag)) continue;
    if (opt->get_type_size() == 0) {
      if (item.inputs.size() == 1 && (item.inputs[0] == "true" || item.inputs[0] == "1")) injected.push_back(flag);
      continue;
    }
    injected.push_back(flag);
    injected.insert(injected.end(), item.inputs.begin(), item.inputs.end());
  }
  args.insert(args.begin() + 1, injected.begin(), injected.end());
  return args;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Constant-memory streaming diffusion sampler with Gaussian-process oracles", "infaudio"};
  app.require_subcommand(1);
  std::string config_path;  // consumed by expand_config

  GenerateFlags gen;
  auto* generate = app.add_subcommand("generate", "sample a frame stream (fifo, batch or concat)");
  generate->add_option("--config", config_path, "key=value file; command-line flags win");
  generate->add_option("--mode", gen.mode, "sampler")->check(CLI::IsMember({"fifo", "batch", "concat"}))->capture_default_str();
  add_denoiser_flags(generate, gen.den);
  add_schedule_flags(generate, gen.sched, "--schedule");
  add_shape_flags(generate, gen.shape);
  generate->add_option("--buffer", gen.buffer, "buffer frames b (-1: ceil(n/4))")->capture_default_str();
  generate->add_option("--buffer-mode", gen.buffer_mode, "sliding or static")
      ->check(CLI::IsMember({"sliding", "static"}))
      ->capture_default_str();
  generate->add_option("--frames", gen.frames, "frames N to emit")->required()->check(CLI::PositiveNumber);
  generate->add_option("--window", gen.window, "concat window W")->check(CLI::PositiveNumber)->capture_default_str();
  generate->add_option("--seed", gen.seed, "64-bit seed")->capture_default_str();
  generate->add_option("--out", gen.out, "IAFS output path")->capture_default_str();
  generate->add_option("--stats-out", gen.stats_out, "RunStats CSV path (default stdout)");
  generate->add_option("--pgm", gen.pgm, "grayscale PGM of the stream");

  ScheduleCmdFlags sch;
  auto* schedule = app.add_subcommand("schedule", "print a timestep schedule as CSV");
  schedule->add_option("--config", config_path, "key=value file; command-line flags win");
  add_schedule_flags(schedule, sch.sched, "--preset");
  schedule->add_option("--out", sch.out, "CSV path (default stdout)");

  AnalyzeFlags ana;
  auto* analyze = app.add_subcommand("analyze-attn", "region scores and focus from an attention map");
  analyze->add_option("map", ana.map, "IAAM file")->required()->check(CLI::ExistingFile);
  analyze->add_option("--buffer", ana.buffer, "buffer frames at capture")->capture_default_str();
  analyze->add_option("--fractions", ana.fractions, "initial,middle,final shares")->delimiter(',')->expected(3);
  analyze->add_option("--out", ana.out, "CSV path (default stdout)");

  ProfileFlags prof;
  auto* profile = app.add_subcommand("profile-mem", "peak allocation of fifo vs batch runs");
  profile->add_option("--config", config_path, "key=value file; command-line flags win");
  add_denoiser_flags(profile, prof.den);
  add_schedule_flags(profile, prof.sched, "--schedule");
  add_shape_flags(profile, prof.shape);
  profile->add_option("--buffer", prof.buffer, "buffer frames b (-1: ceil(n/4))")->capture_default_str();
  profile->add_option("--frames", prof.fifo_frames, "FIFO frame counts")->delimiter(',');
  profile->add_option("--batch-frames", prof.batch_frames, "batch frame counts")->delimiter(',');
  profile->add_option("--seed", prof.seed, "64-bit seed")->capture_default_str();
  profile->add_flag("--rss", prof.rss, "also record process peak RSS per run (one child process each)");
  profile->add_option("--out", prof.out, "CSV path (default stdout)");

  StatsFlags st;
  auto* stats = app.add_subcommand("stats", "moments and autocorrelation of a stream vs GP targets");
  stats->add_option("stream", st.stream, "IAFS file")->required()->check(CLI::ExistingFile);
  add_denoiser_flags(stats, st.den);
  stats->add_option("--window", st.window, "mark a boundary every W frames");
  stats->add_option("--boundaries", st.boundaries, "explicit boundary frame indices")->delimiter(',');
  stats->add_option("--max-lag", st.max_lag, "largest autocorrelation lag")->check(CLI::PositiveNumber)->capture_default_str();
  stats->add_option("--out", st.out, "CSV path (default stdout)");

  try {
    auto args = expand_config(app, std::vector<std::string>(argv + 1, argv + argc));
    std::reverse(args.begin(), args.end());
    app.parse(args);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitUsage;
  }

  try {
    if (*generate) return cmd_generate(gen);
    if (*schedule) return cmd_schedule(sch);
    if (*analyze) return cmd_analyze_attn(ana);
    if (*profile) return cmd_profile_mem(prof);
    if (*stats) return cmd_stats(st);
  } catch (const UsageError& e) {
    std::cerr << "usage error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const Error& e) {
    std::cerr << "error [" << to_string(e.code()) << "]: " << e.what() << '\n';
    return is_parameter_error(e.code()) ? kExitUsage : kExitRuntime;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitRuntime;
  }
  return kExitUsage;
}
