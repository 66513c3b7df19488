#include <gtest/gtest.h>

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <map>
#include <mutex>
#include <random>
#include <thread>

#include "gopforge/error.hpp"
#include "gopforge/rng.hpp"
#include "gopforge/search.hpp"

using namespace gopforge;

namespace {

std::vector<CandidateJob> library_jobs() {
  std::vector<CandidateJob> jobs;
  for (const auto& op : enumerate_library()) jobs.push_back({op.index, op, derive_stream_id({op.index})});
  return jobs;
}

// Loss depends only on the job's stream, like a real candidate training.
CandidateOutcome<std::uint64_t> stream_loss(const CandidateJob& job) {
  RngStream r(1, job.rng_stream_id);
  return {r.next_double(), job.rng_stream_id};
}

double busy_work(std::uint64_t seed) {
  double acc = 0.0;
  RngStream r(seed, 0);
  for (int i = 0; i < 400000; ++i) acc += std::sin(r.next_double());
  return acc;
}

}  // namespace

TEST(Sweep, ArgminWithLowestIndexTieBreak) {
  const auto jobs = library_jobs();
  auto train = [](const CandidateJob& job) -> CandidateOutcome<int> {
    const double loss = job.candidate_index == 10 || job.candidate_index == 40 ? 0.5 : 1.0 + job.candidate_index;
    return {loss, static_cast<int>(job.candidate_index)};
  };
  const auto r = run_sweep<int>(jobs, train, 1);
  EXPECT_EQ(r.winner_index, 10u);
  EXPECT_EQ(*r.winner_params, 10);
  EXPECT_EQ(r.completed, 72u);
  EXPECT_TRUE(r.failures.empty());
  EXPECT_EQ(r.entries.size(), 72u);
  EXPECT_EQ(r.entries[40].loss, 0.5);
}

TEST(Sweep, FailuresScoreInfinityAndAreNotRetried) {
  const auto jobs = library_jobs();
  std::map<std::size_t, int> calls;
  std::mutex mu;
  auto train = [&](const CandidateJob& job) -> CandidateOutcome<int> {
    {
      std::lock_guard lock(mu);
      ++calls[job.candidate_index];
    }
    if (job.candidate_index == 0) throw TrainingError("diverged", 3);
    if (job.candidate_index == 1) throw ValidationError("bad arity");
    if (job.candidate_index == 2) return {std::nan(""), 0};
    return {2.0 + job.candidate_index, 0};
  };
  const auto r = run_sweep<int>(jobs, train, 3);
  EXPECT_EQ(calls[0], 1);
  EXPECT_EQ(calls[1], 1);
  EXPECT_TRUE(std::isinf(r.losses[0]));
  EXPECT_TRUE(std::isinf(r.losses[1]));
  EXPECT_TRUE(std::isinf(r.losses[2]));
  EXPECT_EQ(r.failures.size(), 3u);
  EXPECT_EQ(r.winner_index, 3u);
  EXPECT_FALSE(r.entries[0].ok);
  EXPECT_EQ(r.entries[0].reason, "diverged");
}

TEST(Sweep, TransientErrorsRetriedOnce) {
  const auto jobs = library_jobs();
  std::atomic<int> attempts_5{0};
  std::atomic<int> attempts_6{0};
  auto train = [&](const CandidateJob& job) -> CandidateOutcome<int> {
    if (job.candidate_index == 5 && attempts_5.fetch_add(1) == 0) throw std::runtime_error("flaky");
    if (job.candidate_index == 6) {
      attempts_6.fetch_add(1);
      throw std::runtime_error("broken");
    }
    return {job.candidate_index == 5 ? 0.0 : 1.0, 0};
  };
  const auto r = run_sweep<int>(jobs, train, 2);
  EXPECT_EQ(r.winner_index, 5u);
  EXPECT_EQ(attempts_5.load(), 2);
  EXPECT_EQ(attempts_6.load(), 2);
  EXPECT_EQ(r.failures.size(), 1u);
  EXPECT_EQ(r.failures[0].candidate_index, 6u);
}

TEST(Sweep, AllFailed) {
  const auto jobs = library_jobs();
  auto train = [](const CandidateJob&) -> CandidateOutcome<int> { throw TrainingError("x", 0); };
  const auto r = run_sweep<int>(jobs, train, 2);
  EXPECT_TRUE(r.all_failed());
  EXPECT_EQ(r.failures.size(), 72u);
}

TEST(Sweep, ResultIndependentOfWorkersAndSubmissionOrder) {
  const auto jobs = library_jobs();
  const auto base = run_sweep<std::uint64_t>(jobs, stream_loss, 1);
  std::mt19937_64 gen(3);
  for (std::size_t workers : {2u, 3u, 8u}) {
    auto permuted = jobs;
    std::shuffle(permuted.begin(), permuted.end(), gen);
    const auto r = run_sweep<std::uint64_t>(permuted, stream_loss, workers);
    EXPECT_EQ(r.losses, base.losses);
    EXPECT_EQ(r.winner_index, base.winner_index);
    EXPECT_EQ(r.winner_params, base.winner_params);
    for (std::size_t i = 0; i < jobs.size(); ++i) EXPECT_EQ(r.entries[i].opset, base.entries[i].opset);
  }
}

TEST(Sweep, RejectsMalformedJobs) {
  auto jobs = library_jobs();
  EXPECT_THROW(run_sweep<std::uint64_t>(std::span<const CandidateJob>{}, stream_loss, 1), ValidationError);
  EXPECT_THROW(run_sweep<std::uint64_t>(jobs, stream_loss, 0), ValidationError);
  jobs[3].candidate_index = 4;
  EXPECT_THROW(run_sweep<std::uint64_t>(jobs, stream_loss, 1), ValidationError);
}

TEST(Workers, EnvironmentOverride) {
  ::unsetenv("GOPFORGE_WORKERS");
  EXPECT_EQ(resolve_workers(std::nullopt), 1u);
  EXPECT_EQ(resolve_workers(3), 3u);
  ::setenv("GOPFORGE_WORKERS", "5", 1);
  EXPECT_EQ(resolve_workers(3), 5u);
  ::setenv("GOPFORGE_WORKERS", "zero", 1);
  EXPECT_THROW(resolve_workers(3), ValidationError);
  ::unsetenv("GOPFORGE_WORKERS");
}

TEST(Workers, FourWorkersAtLeastTwiceAsFast) {
  if (std::thread::hardware_concurrency() < 4)
    GTEST_SKIP() << "needs >= 4 hardware threads, have " << std::thread::hardware_concurrency();
  const auto jobs = library_jobs();
  auto train = [](const CandidateJob& job) -> CandidateOutcome<double> {
    const double v = busy_work(job.rng_stream_id);
    return {std::abs(v), v};
  };
  auto timed = [&](std::size_t workers) {
    const auto t0 = std::chrono::steady_clock::now();
    run_sweep<double>(jobs, train, workers);
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  };
  const double serial = timed(1);
  const double parallel = timed(4);
  EXPECT_GE(serial / parallel, 2.0) << "serial " << serial << " s, 4 workers " << parallel << " s";
}
