// Copyright 2026 The ccdkit Authors
// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include <fstream>

#include "ccdkit/config.hpp"
#include "ccdkit/error.hpp"
#include "support.hpp"

using namespace ccdkit;
using namespace ccdkit::config;

namespace {

const std::string kMinimal = R"(schema_version = 1
[backend]
world = "w.json"
[data]
lexicon = "lex.json"
annotations = "ann.json"
)";

ErrorKind kind_of(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.kind();
  }
  FAIL("expected an error");
  return ErrorKind::kInternal;
}

RunConfig from(const std::string& text, std::optional<std::uint64_t> seed = std::nullopt) {
  return RunConfig::from_document(Document::parse(text), "/base", seed);
}

}  // namespace

TEST_CASE("document values") {
  const auto doc = Document::parse(R"(# leading comment
a = "tab\there \"q\" \\ é"
b = 'raw\n'
c = 1_000   # trailing
d = -2.5e1
e = true
f = false
g = ["x", 'y', 3, [1, 2]]
h = "has # inside"

[t.u]
k = 4
)");
  CHECK(doc.at("a").s == "tab\there \"q\" \\ \xc3\xa9");
  CHECK(doc.at("b").s == "raw\\n");
  CHECK(doc.at("c").type == Value::Type::kInt);
  CHECK(doc.at("c").i == 1000);
  CHECK(doc.at("d").d == -25.0);
  CHECK(doc.at("e").b);
  CHECK_FALSE(doc.get_bool("f", true));
  CHECK(doc.at("g").items.size() == 4);
  CHECK(doc.at("g").items[3].items[1].i == 2);
  CHECK(doc.at("h").s == "has # inside");
  CHECK(doc.get_int("t.u.k", 0) == 4);
  CHECK(doc.get_double("t.u.k", 0) == 4.0);
  CHECK(doc.get_string("missing", "fb") == "fb");
  CHECK(kind_of([&] { doc.at("missing"); }) == ErrorKind::kValidation);
  CHECK(kind_of([&] { doc.get_int("a", 0); }) == ErrorKind::kValidation);
  CHECK(kind_of([&] { doc.get_strings("g"); }) == ErrorKind::kValidation);
}

TEST_CASE("syntax errors carry the line") {
  auto message = [](const std::string& text) {
    try {
      Document::parse(text, "cfg.toml");
    } catch (const Error& e) {
      CHECK(e.kind() == ErrorKind::kValidation);
      return std::string(e.what());
    }
    return std::string("no error");
  };
  CHECK(message("a = 1\nb = \n").find("cfg.toml:2") != std::string::npos);
  CHECK(message("a = 1\n[t\n").find("cfg.toml:2") != std::string::npos);
  CHECK(message("a = \"open\n").find("cfg.toml:1") != std::string::npos);
  CHECK(message("a = 1\na = 2\n").find("cfg.toml:2") != std::string::npos);
  CHECK(message("a = 1 2\n") != "no error");
  CHECK(message("= 1\n") != "no error");
  CHECK(message("a = [1, 2\n") != "no error");
}

TEST_CASE("run config defaults and paths") {
  const auto c = from(kMinimal);
  CHECK(c.schema_version == 1);
  CHECK(c.backend.kind == "synthetic");
  CHECK(c.backend.world == std::filesystem::path("/base/w.json"));
  CHECK(c.lexicon == std::filesystem::path("/base/lex.json"));
  CHECK(c.output_dir == std::filesystem::path("/base/out"));
  CHECK_FALSE(c.prompts.has_value());
  CHECK(c.samples.empty());
  CHECK(c.decoding.alpha == 1.0);
  CHECK(c.decoding.beta == 0.1);
  CHECK(c.decoding.max_new_tokens == 512);
  CHECK(c.recall == metrics::RecallMode::kPooled);
  CHECK(c.hash.size() == 16);

  const auto abs = from(kMinimal + "[decoding]\nalpha = 0.5\n[data.x]\n");
  CHECK(abs.decoding.alpha == 0.5);
  const auto up = from("output_dir = \"../o\"\n" + kMinimal);
  CHECK(up.output_dir == std::filesystem::path("/o"));
}

TEST_CASE("profiles set detection and cct, explicit keys win") {
  const auto q = from(kMinimal + "[detection]\nprofile = \"qwen-vl-chat\"\n");
  CHECK(q.detection.theta_ig == 0.85);
  CHECK(q.detection.theta_ee == 0);
  CHECK(q.cct.n_slots == 5);
  CHECK(q.cct.separator == " ");
  const auto m = from(kMinimal + "[detection]\nprofile = \"minigpt-4\"\ntheta_ig = 0.6\n[cct]\nn_slots = 3\n");
  CHECK(m.detection.theta_ig == 0.6);
  CHECK(m.cct.n_slots == 3);
  CHECK(m.cct.separator == ", ");
  CHECK(kind_of([] { from(kMinimal + "[detection]\nprofile = \"nope\"\n"); }) == ErrorKind::kNotFound);
}

TEST_CASE("invalid run configs") {
  CHECK(kind_of([] { from("[backend]\nworld = \"w\"\n[data]\nlexicon = \"l\"\nannotations = \"a\"\n"); }) ==
        ErrorKind::kValidation);
  CHECK(kind_of([] { from("schema_version = 2\n" + kMinimal.substr(kMinimal.find('\n') + 1)); }) ==
        ErrorKind::kValidation);
  CHECK(kind_of([] { from(kMinimal + "[decoding]\nalpah = 1.0\n"); }) == ErrorKind::kValidation);
  CHECK(kind_of([] { from(kMinimal + "[decoding]\nalpha = \"x\"\n"); }) == ErrorKind::kValidation);
  CHECK(kind_of([] { from(kMinimal + "[decoding]\nmax_new_tokens = 0\n"); }) == ErrorKind::kValidation);
  CHECK(kind_of([] { from(kMinimal + "[decoding]\nbeta = 2.0\n"); }) == ErrorKind::kParameter);
  CHECK(kind_of([] { from(kMinimal + "[metrics]\nrecall = \"x\"\n"); }) == ErrorKind::kValidation);
  CHECK(kind_of([] { from("schema_version = 1\n[data]\nlexicon = \"l\"\nannotations = \"a\"\n"); }) ==
        ErrorKind::kValidation);

  const std::string data = "[data]\nlexicon = \"l\"\nannotations = \"a\"\n";
  CHECK(kind_of([&] { from("schema_version = 1\n[backend]\nkind = \"wire\"\n" + data); }) == ErrorKind::kValidation);
  CHECK(kind_of([&] {
          from("schema_version = 1\n[backend]\nkind = \"wire\"\ncommand = \"x\"\nsocket = \"s\"\n" + data);
        }) == ErrorKind::kValidation);
  CHECK_NOTHROW(from("schema_version = 1\n[backend]\nkind = \"wire\"\nsocket = \"s\"\n" + data));
  CHECK(kind_of([&] { from("schema_version = 1\n[backend]\nkind = \"grpc\"\n" + data); }) == ErrorKind::kValidation);
}

TEST_CASE("config hash") {
  const auto base = from(kMinimal);
  CHECK(from(kMinimal).hash == base.hash);
  CHECK(from("output_dir = \"elsewhere\"\n" + kMinimal).hash == base.hash);
}

TEST_CASE("config hash ignores output location only") {
  const auto base = from(kMinimal);
  CHECK(from(kMinimal.substr(0, kMinimal.find("[data]")) + "transcript = \"t.log\"\n" +
             kMinimal.substr(kMinimal.find("[data]")))
            .hash == base.hash);
  CHECK(from(kMinimal, 9).hash != base.hash);
  CHECK(from(kMinimal, 9).seed == 9);
  CHECK(from(kMinimal, 9).decoding.seed == 9);
  CHECK(from(kMinimal + "[decoding]\nalpha = 0.5\n").hash != base.hash);
  CHECK(from("seed = 3\n" + kMinimal).hash == from(kMinimal, 3).hash);
}

TEST_CASE("the shipped config loads") {
  const auto c = RunConfig::load(std::filesystem::path(CCDKIT_ASSET_DIR) / ".." / "configs" / "synthetic.toml");
  CHECK(c.seed == 1234);
  CHECK(std::filesystem::exists(c.backend.world));
  CHECK(std::filesystem::exists(c.lexicon));
  CHECK(c.prompts.has_value());
  CHECK(c.detection.theta_ig == 0.75);
  CHECK(c.cct.n_slots == 10);

  const auto dir = testing::scratch("config");
  CHECK(kind_of([&] { RunConfig::load(dir / "absent.toml"); }) == ErrorKind::kNotFound);
}
