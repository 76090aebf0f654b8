#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <cstdio>
#include <memory>
#include <random>

#include "bitweave/environment.hpp"

using namespace bitweave;

namespace {

// Clock returning a scripted sequence; repeats the last value once drained.
ClockFn scripted(std::vector<double> vals) {
  auto state = std::make_shared<std::pair<std::vector<double>, std::size_t>>(std::move(vals), 0);
  return [state] {
    auto& [v, i] = *state;
    return i < v.size() ? v[i++] : v.back();
  };
}

// Scorer with a fixed per-plan speedup table and an invocation counter.
class TableScorer : public PlanScorer {
 public:
  TableScorer(BitBudget budget, std::map<std::string, double> table)
      : budget_(std::move(budget)),
        baseline_plan_(alto_default_plan(budget_)),
        table_(std::move(table)) {}

  const BitBudget& budget() const override { return budget_; }
  double baseline_seconds() const override { return 1.0; }
  const EncodingPlan& baseline_plan() const override { return baseline_plan_; }
  EvalRecord score(const EncodingPlan& plan) override {
    ++calls;
    EvalRecord rec;
    auto it = table_.find(format_plan(plan));
    if (it == table_.end()) {
      rec.timed_out = true;
      rec.seconds = 9.0;
      return rec;
    }
    rec.speedup = it->second;
    rec.seconds = 1.0 / rec.speedup;
    return rec;
  }

  int calls = 0;

 private:
  BitBudget budget_;
  EncodingPlan baseline_plan_;
  std::map<std::string, double> table_;
};

SparseTensorCoo two_by_two() {
  return SparseTensorCoo::from_entries({2, 2}, {{0, 1, 1}, {1, 0, 1}}, {1.0, 2.0, 3.0});
}

}  // namespace

TEST_CASE("repeat evaluations come from the cache, not the scorer") {
  auto scorer = std::make_unique<TableScorer>(BitBudget{{1, 1}},
                                              std::map<std::string, double>{{"1,2", 1.5}});
  TableScorer* raw = scorer.get();
  Environment env(std::move(scorer));

  EncodingPlan plan = parse_plan("1,2");
  EvalRecord first = env.evaluate(plan);
  CHECK(first.speedup == 1.5);
  CHECK_FALSE(first.cached);
  EvalRecord second = env.evaluate(plan);
  CHECK(second.speedup == 1.5);
  CHECK(second.cached);
  CHECK(raw->calls == 1);

  EnvCounters c = env.counters();
  CHECK(c.real_evals == 1);
  CHECK(c.cache_hits == 1);
  CHECK(c.timeouts == 0);

  CHECK(env.lookup(plan).has_value());
  CHECK_FALSE(env.lookup(parse_plan("2,1")).has_value());
}

TEST_CASE("scorer invocations equal the number of distinct plans") {
  BitBudget budget{{2, 2}};
  auto scorer = std::make_unique<SyntheticScorer>(budget, parse_plan("1,2,1,2"));
  Environment env(std::move(scorer));
  std::mt19937_64 rng(5);
  std::vector<EncodingPlan> plans = enumerate_terminal_plans(budget);
  for (int i = 0; i < 200; ++i) env.evaluate(plans[rng() % plans.size()]);
  CHECK(env.counters().real_evals == plans.size());
  CHECK(env.counters().cache_hits == 200 - plans.size());
}

TEST_CASE("fake-timer environment: baseline 2s, candidate 1s gives reward 2") {
  BenchConfig cfg;
  cfg.rank = 2;
  cfg.repeats = 1;
  cfg.warmup = 0;
  cfg.threads = 1;
  // Baseline sweep: start, checksum x2 units, timed units (0,1) and (1,2).
  // Candidate sweep: start, checksum x2, timed (2,2.5) and (2.5,3).
  ClockFn clock = scripted({0, 0, 0, 0, 0, 0, 1, 1, 2,
                            2, 2, 2, 2, 2, 2, 2.5, 2.5, 3});
  Environment env(std::make_unique<BenchmarkScorer>(two_by_two(), cfg, 5.0, clock));
  CHECK(env.baseline_seconds() == 2.0);
  EvalRecord rec = env.evaluate(parse_plan("2,1"));
  CHECK(rec.speedup == 2.0);
  CHECK(rec.seconds == 1.0);
  CHECK_FALSE(rec.timed_out);
}

TEST_CASE("timed-out plans score the worst real speedup seen so far") {
  BenchConfig cfg;
  cfg.rank = 2;
  cfg.repeats = 1;
  cfg.warmup = 0;
  cfg.threads = 1;
  // Baseline totals 2s; the first candidate totals 4s (speedup 0.5); the
  // second candidate blows through the 10s cap during its checksum pass.
  ClockFn clock = scripted({0, 0, 0, 0, 0, 0, 1, 1, 2,
                            2, 2, 2, 2, 2, 2, 4, 4, 6,
                            6, 6, 99});
  Environment env(std::make_unique<BenchmarkScorer>(two_by_two(), cfg, 5.0, clock));
  EvalRecord slow = env.evaluate(parse_plan("2,1"));
  CHECK(slow.speedup == 0.5);
  CHECK(env.floor_reward() == 0.5);

  EvalRecord out = env.evaluate(parse_plan("1,2"));
  CHECK(out.timed_out);
  CHECK(out.speedup == 0.5);
  CHECK(env.counters().timeouts == 1);
  CHECK(env.counters().real_evals == 2);

  // The floored record is cached; revisiting does not rerun the benchmark.
  EvalRecord again = env.evaluate(parse_plan("1,2"));
  CHECK(again.cached);
  CHECK(again.speedup == 0.5);
  CHECK(env.counters().real_evals == 2);
}

TEST_CASE("a timeout before any real measurement is bounded by the cutoff ratio") {
  BenchConfig cfg;
  cfg.rank = 2;
  cfg.repeats = 1;
  cfg.warmup = 0;
  cfg.threads = 1;
  ClockFn clock = scripted({0, 0, 0, 0, 0, 0, 1, 1, 2,
                            2, 2, 50});
  Environment env(std::make_unique<BenchmarkScorer>(two_by_two(), cfg, 5.0, clock));
  EvalRecord rec = env.evaluate(parse_plan("2,1"));
  CHECK(rec.timed_out);
  CHECK(rec.speedup == doctest::Approx(2.0 / 48.0));   // baseline over elapsed-at-cutoff
}

TEST_CASE("synthetic scorer rewards agreement with the hidden plan") {
  BitBudget budget{{2, 3, 1}};
  EncodingPlan hidden = parse_plan("2,2,1,3,1,2");
  SyntheticScorer scorer(budget, hidden);
  CHECK(SyntheticScorer::matches(hidden, hidden) == 6);
  CHECK(SyntheticScorer::matches(hidden, parse_plan("2,2,1,3,2,1")) == 4);

  EvalRecord perfect = scorer.score(hidden);
  CHECK(perfect.speedup == doctest::Approx(std::exp(1.0)));
  CHECK(perfect.seconds == doctest::Approx(1.0 / std::exp(1.0)));
  CHECK(scorer.baseline_seconds() == 1.0);
  CHECK_THROWS_AS(scorer.score(parse_plan("1,1,1,1,1,1")), DomainError);

  // Exactly one of the 60 plans earns the maximal reward.
  Environment env(std::make_unique<SyntheticScorer>(budget, hidden));
  int best_count = 0;
  for (const EncodingPlan& p : enumerate_terminal_plans(budget))
    if (env.evaluate(p).speedup == doctest::Approx(std::exp(1.0))) ++best_count;
  CHECK(best_count == 1);
}

TEST_CASE("cache rows persist as plan;speedup;seconds and reload") {
  BitBudget budget{{1, 1}};
  const char* path = "test_env_cache_tmp.txt";
  {
    auto scorer = std::make_unique<TableScorer>(
        budget, std::map<std::string, double>{{"1,2", 1.5}, {"2,1", 0.25}});
    Environment env(std::move(scorer));
    env.evaluate(parse_plan("1,2"));
    env.evaluate(parse_plan("2,1"));
    env.save_cache(path);
  }
  auto scorer = std::make_unique<TableScorer>(budget, std::map<std::string, double>{});
  TableScorer* raw = scorer.get();
  Environment env(std::move(scorer));
  CHECK(env.load_cache(path) == 2);
  std::remove(path);

  EvalRecord rec = env.evaluate(parse_plan("1,2"));
  CHECK(rec.cached);
  CHECK(rec.speedup == 1.5);
  CHECK(raw->calls == 0);
  CHECK(env.floor_reward() == 0.25);

  CHECK_THROWS_AS(env.load_cache("missing_cache_file.txt"), ParseError);
}

TEST_CASE("malformed cache rows are rejected with the line number") {
  BitBudget budget{{1, 1}};
  const char* path = "test_env_cache_bad_tmp.txt";
  auto write = [&](const std::string& text) {
    std::FILE* f = std::fopen(path, "w");
    std::fwrite(text.data(), 1, text.size(), f);
    std::fclose(f);
  };
  Environment env(std::make_unique<TableScorer>(budget, std::map<std::string, double>{}));
  write("1,2;1.5\n");
  CHECK_THROWS_AS(env.load_cache(path), ParseError);
  write("1,2;abc;1.0\n");
  CHECK_THROWS_AS(env.load_cache(path), ParseError);
  write("1,1;1.5;1.0\n");
  CHECK_THROWS_AS(env.load_cache(path), DomainError);   // plan violates the budget
  write("1,2;-2;1.0\n");
  CHECK_THROWS_AS(env.load_cache(path), ParseError);
  std::remove(path);
}

TEST_CASE("real-clock self comparison lands near speedup one") {
  std::mt19937_64 rng(77);
  std::vector<std::vector<Index>> coords(3);
  std::vector<double> values;
  for (int i = 0; i < 3000; ++i) {
    for (auto& c : coords) c.push_back(rng() % 32);
    values.push_back(1.0);
  }
  auto t = SparseTensorCoo::from_entries({32, 32, 32}, coords, values);
  BenchConfig cfg;
  cfg.rank = 4;
  cfg.repeats = 5;
  cfg.warmup = 1;
  cfg.threads = 1;
  Environment env(std::make_unique<BenchmarkScorer>(t, cfg));
  EvalRecord rec = env.evaluate(alto_default_plan(t.dims));
  CHECK(rec.speedup > 0.5);
  CHECK(rec.speedup < 2.0);
}
