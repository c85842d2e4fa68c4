/*
 * Copyright 2026 The motionsynth Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *      http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#include <atomic>
#include <fstream>
#include <thread>

#include "doctest.h"

#include "caption_goldens.hpp"
#include "motionsynth/caption.hpp"
#include "motionsynth/errors.hpp"
#include "motionsynth/gateway.hpp"
#include "motionsynth/lexicon.hpp"
#include "motionsynth/paraphrase.hpp"

// After Eigen: <resolv.h> defines a _res macro.
#include "httplib.h"
#include "json.hpp"

using namespace motionsynth;

namespace {

MotionCaption caption_of(const std::string& text, int segments = 1) {
  return MotionCaption{text, parse_caption(text, segments)};
}

ScreenVerdict screen(const std::string& caption, const std::string& paraphrase) {
  return screen_consistency(caption_of(caption), paraphrase, DirectionLexicon::builtin());
}

const Sleeper kNoSleep = [](std::chrono::milliseconds) {};

// Completion server on an ephemeral port. Replies follow `script`, one entry
// per request; the last entry repeats.
class FakeServer {
 public:
  struct Reply {
    int status;
    std::string text;
  };

  explicit FakeServer(std::vector<Reply> script, bool chat = false)
      : script_(std::move(script)) {
    server_.Post("/v1/completions", [this, chat](const httplib::Request& req, httplib::Response& res) {
      const auto body = nlohmann::json::parse(req.body);
      {
        std::lock_guard lock(mu_);
        bodies_.push_back(body);
        headers_.push_back(req.get_header_value("Authorization"));
      }
      const std::size_t i = std::min<std::size_t>(calls_++, script_.size() - 1);
      const Reply& r = script_[i];
      res.status = r.status;
      std::string text = r.text;
      if (text == "<echo>") {
        const std::string prompt = body.contains("messages")
                                       ? body["messages"].back()["content"].get<std::string>()
                                       : body["prompt"].get<std::string>();
        text = " " + prompt.substr(prompt.rfind(": ") + 2);
        text = text.substr(0, text.find("\nASSISTANT:"));
      }
      nlohmann::json reply;
      if (chat) {
        reply["choices"] = {{{"message", {{"role", "assistant"}, {"content", text}}}}};
      } else {
        reply["choices"] = {{{"text", text}}};
      }
      res.set_content(r.status == 200 ? reply.dump() : "busy", "application/json");
    });
    port_ = server_.bind_to_any_port("127.0.0.1");
    thread_ = std::thread([this] { server_.listen_after_bind(); });
    server_.wait_until_ready();
  }
  ~FakeServer() {
    server_.stop();
    thread_.join();
  }

  std::string url() const { return "http://127.0.0.1:" + std::to_string(port_) + "/v1/completions"; }
  int calls() const { return calls_; }
  nlohmann::json body(std::size_t i) {
    std::lock_guard lock(mu_);
    return bodies_.at(i);
  }
  std::string auth(std::size_t i) {
    std::lock_guard lock(mu_);
    return headers_.at(i);
  }

 private:
  std::vector<Reply> script_;
  httplib::Server server_;
  std::thread thread_;
  int port_ = 0;
  std::atomic<int> calls_{0};
  std::mutex mu_;
  std::vector<nlohmann::json> bodies_;
  std::vector<std::string> headers_;
};

}  // namespace

TEST_CASE("prompt layout") {
  const std::string p = render_prompt("car", "A small car in the left moves right");
  const std::string tail =
      "to describe the motion: A small car in the left moves right\nASSISTANT:";
  CHECK(p.size() > tail.size());
  CHECK(p.compare(p.size() - tail.size(), tail.size(), tail) == 0);
  CHECK(p.rfind("A chat between a curious user", 0) == 0);
  CHECK(p.find("\nUSER: Hello!\nASSISTANT: Hi!</s>\nUSER: Rephrase this video caption using verbs related to car to describe the motion: ") !=
        std::string::npos);
  CHECK(render_prompt("hot air balloon", "A hot air balloon in the top").find(
            "verbs related to hot air balloon to describe") != std::string::npos);
  CHECK(p != render_prompt("cars", "A small car in the left moves right"));
  CHECK_THROWS_AS(render_prompt("car", ""), ArgumentError);
  CHECK_THROWS_AS(render_prompt("", "A car in the top"), ArgumentError);
}

TEST_CASE("completion extraction") {
  CHECK(extract_completion("USER: x\nASSISTANT: The car zooms left.</s>") == "The car zooms left.");
  CHECK(extract_completion("  The car zooms left.  ") == "The car zooms left.");
  CHECK(extract_completion("ASSISTANT: </s>").empty());
}

TEST_CASE("screen examples") {
  CHECK(screen("A car in the center moves left", "the car glides leftward").accepted());
  const ScreenVerdict v = screen("A car in the center moves left", "the car darts to the right");
  CHECK_FALSE(v.accepted());
  CHECK(v.reason == "direction-missing");
  CHECK(screen("A car in the center moves left", "the car darts to the left and to the right").reason ==
        "direction-contradiction");
  CHECK(screen("A car in the top-left", "a car sits in the corner").accepted());
  CHECK(screen("A car in the top-left", "a bus sits in the corner").reason == "object-missing");
  CHECK(screen("A car in the center moves left", "the vehicle heads left").accepted());
  CHECK(screen("A car in the right moves left", "the car on the right side heads left").accepted());
  CHECK(screen("A car in the center while rotating left", "the car spins clockwise").reason ==
        "rotation-contradiction");
  CHECK(screen("A car in the center moves right while rotating left", "the car heads right, turning left").accepted());
  CHECK(screen("A car in the center moves right while rotating left",
               "the car heads right, turning to the left").accepted());
}

TEST_CASE("adversarial fixture is fully rejected") {
  std::ifstream in(MOTIONSYNTH_FIXTURES "/adversarial_paraphrases.tsv");
  REQUIRE(in);
  std::string line;
  int rows = 0;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    const auto cols = testing::split(line, '\t');
    REQUIRE(cols.size() == 3);
    ++rows;
    CAPTURE(line);
    const auto segments = static_cast<int>(std::count(cols[0].begin(), cols[0].end(), ',')) + 1;
    const ScreenVerdict v = screen_consistency(caption_of(cols[0], segments), cols[1],
                                               DirectionLexicon::builtin());
    CHECK_FALSE(v.accepted());
    // Identity paraphrases of the same captions pass.
    CHECK(screen_consistency(caption_of(cols[0], segments), cols[0], DirectionLexicon::builtin()).accepted());
  }
  CHECK(rows == 30);
}

TEST_CASE("offline paraphraser passes its own screen") {
  const auto& lex = DirectionLexicon::builtin();
  const std::vector<SpriteInfo> sprites{{"car", 60, 30}, {"hot air balloon", 40, 70}, {"cup", 50, 50}};
  std::set<std::string> captions;
  std::set<std::string> distinct;
  for (int k : {2, 3, 4}) {
    GenConfig gen;
    gen.num_keyframes = k;
    Rng rng(100 + static_cast<std::uint64_t>(k));
    for (int n = 0; n < 1000; ++n) {
      const MotionSpec spec = sample_motion(gen, sprites, rng);
      const MotionCaption c = assemble_caption(spec, interpolate(spec, gen.num_frames), gen, {});
      const std::string p = offline_paraphrase(c, lex);
      CAPTURE(c.rendered);
      CAPTURE(p);
      CHECK(screen_consistency(c, p, lex).accepted());
      CHECK(p == offline_paraphrase(c, lex));
      captions.insert(c.rendered);
      distinct.insert(p);
    }
  }
  CHECK(distinct.size() == captions.size());
}

TEST_CASE("offline downward rewrite uses a downward verb") {
  const auto& lex = DirectionLexicon::builtin();
  const MotionCaption c = caption_of("A car in the center moves quickly downwards");
  const ParaphraseResult r = paraphrase(c, nullptr);
  CHECK(r.model_id == kOfflineModelId);
  CHECK(r.verdict.accepted());
  const auto words = words_of(r.text);
  CHECK(std::any_of(words.begin(), words.end(),
                    [&](const std::string& w) { return lex.contains("direction.down", w); }));
  CHECK(r.text != c.rendered);
}

TEST_CASE("retry delays") {
  RetryPolicy p;
  CHECK(p.delay_ms(1) == 250);
  CHECK(p.delay_ms(2) == 500);
  CHECK(p.delay_ms(5) == 4000);
  CHECK(p.delay_ms(9) == 4000);
  CHECK(is_transient(0));
  CHECK(is_transient(429));
  CHECK(is_transient(503));
  CHECK_FALSE(is_transient(400));
  CHECK_FALSE(is_transient(401));
}

TEST_CASE("http endpoint retries transient failures") {
  FakeServer server({{503, ""}, {429, ""}, {200, "ASSISTANT: The car darts leftward.</s>"}});
  EndpointConfig cfg;
  cfg.url = server.url();
  cfg.headers["Authorization"] = "Bearer t0k";
  auto endpoint = make_http_endpoint(cfg);
  ParaphraseOptions opts;
  std::vector<std::chrono::milliseconds> waits;
  opts.sleep = [&](std::chrono::milliseconds d) { waits.push_back(d); };
  const ParaphraseResult r = paraphrase(caption_of("A car in the center moves left"), endpoint.get(), opts);
  CHECK(r.text == "The car darts leftward.");
  CHECK(r.verdict.accepted());
  CHECK(r.model_id == "vicuna-13b-v1.5");
  CHECK(server.calls() == 3);
  REQUIRE(waits.size() == 2);
  CHECK(waits[0].count() == 250);
  CHECK(waits[1].count() == 500);
  const auto body = server.body(0);
  CHECK(body["model"] == "vicuna-13b-v1.5");
  CHECK(body["max_tokens"] == 96);
  CHECK(body["temperature"] == doctest::Approx(0.7));
  CHECK(body["prompt"].get<std::string>().find("motion: A car in the center moves left\nASSISTANT:") !=
        std::string::npos);
  CHECK(server.auth(0) == "Bearer t0k");
}

TEST_CASE("exhausted retries raise a gateway error") {
  FakeServer server({{503, ""}});
  EndpointConfig cfg;
  cfg.url = server.url();
  auto endpoint = make_http_endpoint(cfg);
  ParaphraseOptions opts;
  opts.sleep = kNoSleep;
  opts.retry.max_attempts = 3;
  try {
    paraphrase(caption_of("A car in the center moves left"), endpoint.get(), opts);
    FAIL("expected GatewayError");
  } catch (const GatewayError& e) {
    CHECK(e.last_status() == 503);
  }
  CHECK(server.calls() == 3);
}

TEST_CASE("non-transient failures are not retried") {
  FakeServer server({{401, ""}});
  EndpointConfig cfg;
  cfg.url = server.url();
  auto endpoint = make_http_endpoint(cfg);
  ParaphraseOptions opts;
  opts.sleep = kNoSleep;
  CHECK_THROWS_AS(paraphrase(caption_of("A car in the center moves left"), endpoint.get(), opts), GatewayError);
  CHECK(server.calls() == 1);
}

TEST_CASE("unreachable endpoint") {
  EndpointConfig cfg;
  cfg.url = "http://127.0.0.1:1/v1/completions";
  cfg.timeout_ms = 500;
  auto endpoint = make_http_endpoint(cfg);
  RetryPolicy retry;
  retry.max_attempts = 2;
  try {
    complete_with_retry(*endpoint, build_prompt("car", "A car in the top"), retry, kNoSleep);
    FAIL("expected GatewayError");
  } catch (const GatewayError& e) {
    CHECK(e.last_status() == 0);
  }
  cfg.url = "ftp://example.com/x";
  CHECK_THROWS_AS(make_http_endpoint(cfg), ConfigError);
}

TEST_CASE("empty completion is rejected, echo is accepted") {
  FakeServer empty({{200, "   "}});
  EndpointConfig cfg;
  cfg.url = empty.url();
  auto endpoint = make_http_endpoint(cfg);
  const ParaphraseResult r = paraphrase(caption_of("A car in the center moves left"), endpoint.get());
  CHECK_FALSE(r.verdict.accepted());
  CHECK(r.verdict.reason == "empty");

  FakeServer echo({{200, "<echo>"}}, true);
  cfg.url = echo.url();
  cfg.shape = RequestShape::kChat;
  auto chat = make_http_endpoint(cfg);
  const MotionCaption c = caption_of("A small car in the left moves right while rotating left slightly");
  const ParaphraseResult e = paraphrase(c, chat.get());
  CHECK(e.text == c.rendered);
  CHECK(e.verdict.accepted());
  const auto body = echo.body(0);
  REQUIRE(body.contains("messages"));
  CHECK(body["messages"][0]["role"] == "system");
  CHECK(body["messages"].back()["content"].get<std::string>().find(c.rendered) != std::string::npos);
}

TEST_CASE("batch keeps input order under concurrency") {
  FakeServer echo({{200, "<echo>"}});
  EndpointConfig cfg;
  cfg.url = echo.url();
  auto endpoint = make_http_endpoint(cfg);
  std::vector<MotionCaption> captions;
  for (const char* dir : {"left", "right", "upwards", "downwards"}) {
    for (const char* obj : {"car", "ball", "kite"}) {
      captions.push_back(caption_of(std::string("A ") + obj + " in the center moves " + dir));
    }
  }
  ParaphraseOptions opts;
  opts.sleep = kNoSleep;
  const auto results = paraphrase_batch(captions, endpoint.get(), opts, 4);
  REQUIRE(results.size() == captions.size());
  for (std::size_t i = 0; i < captions.size(); ++i) {
    CHECK(results[i].text == captions[i].rendered);
    CHECK(results[i].verdict.accepted());
  }
  CHECK(echo.calls() == static_cast<int>(captions.size()));

  FakeServer down({{500, ""}});
  cfg.url = down.url();
  auto broken = make_http_endpoint(cfg);
  opts.retry.max_attempts = 1;
  const auto failed = paraphrase_batch(captions, broken.get(), opts, 3);
  for (const auto& r : failed) {
    CHECK_FALSE(r.verdict.accepted());
    CHECK(r.verdict.reason.rfind("gateway:", 0) == 0);
  }
}

TEST_CASE("lexicon parsing") {
  const DirectionLexicon lex = DirectionLexicon::parse(
      "# comment\n"
      "direction.left = left port\n"
      "rewrite.left = slides port|heads left\n"
      "object.ship = boat\n");
  CHECK(lex.contains("direction.left", "port"));
  CHECK_FALSE(lex.contains("direction.right", "right"));
  CHECK(lex.phrases("rewrite.left").size() == 2);
  CHECK(lex.object_names("ship") == std::vector<std::string>{"ship", "boat"});
  CHECK_THROWS_AS(DirectionLexicon::parse("no equals sign here\n"), ConfigError);
  CHECK(words_of("The Car's  anti-clockwise, turn!") ==
        std::vector<std::string>{"the", "car's", "anti-clockwise", "turn"});
}
