// Copyright 2026 The ccdkit Authors
// SPDX-License-Identifier: Apache-2.0

// ccdkit run      --config PATH [--stage S] [--jobs N] [--seed N]
// ccdkit analyze  --config PATH --experiment NAME [--jobs N] [--seed N]
// ccdkit serve    --world PATH [--socket PATH]
//
// Exit codes: 0 success, 1 validation, 2 backend/transport, 3 partial
// pipeline failure.

#include <sys/socket.h>
#include <sys/un.h>
#include <unistd.h>

#include <cstdint>
#include <cstring>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "ccdkit/error.hpp"
#include "ccdkit/pipeline.hpp"
#include "ccdkit/synth.hpp"
#include "ccdkit/wire.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitValidation = 1;
constexpr int kExitBackend = 2;
constexpr int kExitPartial = 3;

int exit_code_for(ccdkit::ErrorKind kind) {
  using ccdkit::ErrorKind;
  return kind == ErrorKind::kTransport || kind == ErrorKind::kProtocol ? kExitBackend : kExitValidation;
}

int report(const ccdkit::pipeline::Outcome& outcome) {
  for (const auto& path : outcome.written) std::cout << path.string() << "\n";
  for (const auto& f : outcome.failures) {
    std::cerr << "ccdkit: sample " << f.sample_id << " failed at " << f.stage << ": " << f.message << "\n";
  }
  return outcome.failures.empty() ? kExitOk : kExitPartial;
}

int serve_socket(ccdkit::Backend& backend, const std::string& path) {
  const int fd = ::socket(AF_UNIX, SOCK_STREAM, 0);
  sockaddr_un addr{};
  addr.sun_family = AF_UNIX;
  if (fd < 0 || path.size() >= sizeof addr.sun_path) {
    std::cerr << "ccdkit: cannot create socket " << path << "\n";
    return kExitBackend;
  }
  std::strncpy(addr.sun_path, path.c_str(), sizeof addr.sun_path - 1);
  ::unlink(path.c_str());
  if (::bind(fd, reinterpret_cast<sockaddr*>(&addr), sizeof addr) != 0 || ::listen(fd, 4) != 0) {
    std::cerr << "ccdkit: cannot listen on " << path << ": " << std::strerror(errno) << "\n";
    return kExitBackend;
  }
  while (true) {
    const int conn = ::accept(fd, nullptr, nullptr);
    if (conn < 0) continue;
    ccdkit::wire::FdTransport transport(conn, ::dup(conn));
    ccdkit::wire::serve(backend, transport);
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Hallucination induction, detection and contrastive suppression for vision-language decoding"};
  app.require_subcommand(1);

  std::string config_path;
  std::string stage = "all";
  std::string experiment;
  std::size_t jobs = 1;
  std::optional<std::uint64_t> seed;
  std::string world;
  std::string socket_path;

  auto* run = app.add_subcommand("run", "Run pipeline stages");
  run->add_option("--config", config_path, "Run configuration file")->required();
  run->add_option("--stage", stage, "caption, induce, detect, suppress, eval or all")
      ->check(CLI::IsMember({"caption", "induce", "detect", "suppress", "eval", "all"}));
  run->add_option("--jobs", jobs, "Samples processed in parallel")->check(CLI::PositiveNumber);
  run->add_option("--seed", seed, "Overrides the configured seed");

  auto* analyze = app.add_subcommand("analyze", "Run a statistical experiment");
  analyze->add_option("--config", config_path, "Run configuration file")->required();
  analyze->add_option("--experiment", experiment, "poscore, similarity, repetition or enrichment")->required();
  analyze->add_option("--jobs", jobs, "Samples processed in parallel")->check(CLI::PositiveNumber);
  analyze->add_option("--seed", seed, "Overrides the configured seed");

  auto* serve = app.add_subcommand("serve", "Serve the synthetic backend over the wire protocol");
  serve->add_option("--world", world, "Synthetic world fixture")->required()->check(CLI::ExistingFile);
  serve->add_option("--socket", socket_path, "Listen on a unix socket instead of stdio");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kExitOk : kExitValidation;
  }

  try {
    if (serve->parsed()) {
      ccdkit::synth::SyntheticBackend backend(ccdkit::synth::SyntheticWorld::load(world));
      if (!socket_path.empty()) return serve_socket(backend, socket_path);
      ccdkit::wire::FdTransport transport(::dup(STDIN_FILENO), ::dup(STDOUT_FILENO));
      ccdkit::wire::serve(backend, transport);
      return kExitOk;
    }

    const auto cfg = ccdkit::config::RunConfig::load(config_path, seed);
    auto resources = ccdkit::pipeline::open_resources(cfg);
    ccdkit::pipeline::Pipeline pipeline(cfg, resources);
    if (run->parsed()) return report(pipeline.run(ccdkit::pipeline::parse_stage(stage), jobs));
    return report(pipeline.analyze(experiment, jobs));
  } catch (const ccdkit::Error& e) {
    std::cerr << "ccdkit: " << e.what() << "\n";
    return exit_code_for(e.kind());
  } catch (const std::exception& e) {
    std::cerr << "ccdkit: " << e.what() << "\n";
    return kExitValidation;
  }
}
