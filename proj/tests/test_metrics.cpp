#include <doctest.h>

#include <cstdio>
#include <random>

#include "veritas/metrics.hpp"

using namespace veritas;

namespace {

std::vector<MetricRecord> scan(std::string_view transcript,
                               StreamKind stream = StreamKind::stdout_stream) {
  return parse_metrics(transcript, default_metric_patterns(), stream, Timestamp::from_ms(0));
}

}  // namespace

TEST_CASE("default grammar matches the common metric styles") {
  auto loss = scan("loss=1.065107\n");
  REQUIRE(loss.size() == 1);
  CHECK(loss[0].name == "loss");
  CHECK(loss[0].lexical_value == "1.065107");
  CHECK(loss[0].numeric_value == doctest::Approx(1.065107));

  auto acc = scan("val_accuracy: 0.913\n");
  REQUIRE(acc.size() == 1);
  CHECK(acc[0].name == "val_accuracy");
  CHECK(acc[0].lexical_value == "0.913");

  auto spaced = scan("train/f1 = -3.5e-2\n");
  REQUIRE(spaced.size() == 1);
  CHECK(spaced[0].name == "train/f1");
  CHECK(spaced[0].lexical_value == "-3.5e-2");
}

TEST_CASE("non-metric lines yield no records") {
  CHECK(scan("Epoch 3/10 starting...\n").empty());
  CHECK(scan("loading checkpoint\n").empty());
  CHECK(scan("time: 12:30:45\n").empty());  // clock, not a metric lexeme
  CHECK(scan("\n\n").empty());
}

TEST_CASE("first match per line wins; one record per line") {
  auto recs = scan("loss=0.5 acc=0.9\n");
  REQUIRE(recs.size() == 1);
  CHECK(recs[0].name == "loss");
}

TEST_CASE("byte offsets point at line starts") {
  // Offsets hand-counted: line 1 is 14 bytes ("# warmup done\n"),
  // line 2 is 9 bytes ("loss=0.25" + \n = 10).
  const std::string transcript =
      "# warmup done\n"
      "loss=0.25\n"
      "note\n"
      "val_accuracy: 0.913\n";
  auto recs = scan(transcript);
  REQUIRE(recs.size() == 2);
  CHECK(recs[0].name == "loss");
  CHECK(recs[0].byte_offset == 14);
  CHECK(recs[1].name == "val_accuracy");
  CHECK(recs[1].byte_offset == 14 + 10 + 5);
}

TEST_CASE("stream label and order follow the stream") {
  auto recs = scan("a: 1\nb: 2\n", StreamKind::stderr_stream);
  REQUIRE(recs.size() == 2);
  CHECK(recs[0].stream == StreamKind::stderr_stream);
  CHECK(recs[0].name == "a");
  CHECK(recs[1].name == "b");
}

TEST_CASE("scanner handles split feeds, CRLF, and unterminated tails") {
  MetricScanner scanner(default_metric_patterns(), StreamKind::stdout_stream);
  scanner.feed("val_acc", Timestamp::from_ms(1));
  scanner.feed("uracy: 0.9", Timestamp::from_ms(2));
  scanner.feed("13\r\nloss=0.5", Timestamp::from_ms(3));
  scanner.finish(Timestamp::from_ms(4));  // flush the unterminated final line
  auto recs = scanner.take();
  REQUIRE(recs.size() == 2);
  CHECK(recs[0].name == "val_accuracy");
  CHECK(recs[0].lexical_value == "0.913");
  CHECK(recs[0].byte_offset == 0);
  CHECK(recs[1].name == "loss");
}

TEST_CASE("oversized lines are not metric candidates but offsets stay exact") {
  std::string huge(100000, 'x');
  huge += "\nloss=0.5\n";
  auto recs = scan(huge);
  REQUIRE(recs.size() == 1);
  CHECK(recs[0].byte_offset == 100001);
}

TEST_CASE("invalid UTF-8 is replaced, not fatal") {
  std::string line = "loss=0.5 \xff\xfe\n";
  auto recs = scan(line);
  REQUIRE(recs.size() == 1);
  CHECK(recs[0].lexical_value == "0.5");
}

TEST_CASE("custom patterns extend the defaults") {
  auto patterns = default_metric_patterns();
  patterns.push_back(MetricPattern{R"(\[metric\] ([a-z_]+) -> ([0-9.]+))", 1, 2});
  auto recs = parse_metrics("[metric] recall -> 0.77\n", patterns, StreamKind::stdout_stream,
                            Timestamp::from_ms(0));
  REQUIRE(recs.size() == 1);
  CHECK(recs[0].name == "recall");
  CHECK(recs[0].lexical_value == "0.77");
}

TEST_CASE("numeric round trip: parser output re-serialized parses back equal") {
  std::mt19937_64 rng(42);
  std::uniform_real_distribution<double> dist(-1e6, 1e6);
  for (int i = 0; i < 500; ++i) {
    const double v = dist(rng);
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    auto recs = scan(std::string("metric=") + buf + "\n");
    REQUIRE(recs.size() == 1);
    char round[64];
    std::snprintf(round, sizeof round, "%.17g", recs[0].numeric_value);
    CHECK(std::strtod(round, nullptr) == recs[0].numeric_value);
    CHECK(recs[0].numeric_value == v);
  }
}
