#pragma once

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <exception>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <thread>
#include <vector>

#include "gopforge/error.hpp"
#include "gopforge/operators.hpp"

namespace gopforge {

// One candidate of an operator-set sweep. The stream id is a pure function
// of (run seed, step, phase, candidate), never of scheduling order.
struct CandidateJob {
  std::size_t candidate_index = 0;
  OperatorSet opset;
  std::uint64_t rng_stream_id = 0;
};

template <typename Params>
struct CandidateOutcome {
  double loss = std::numeric_limits<double>::infinity();
  Params params;
};

struct CandidateFailure {
  std::size_t candidate_index = 0;
  std::string reason;
};

// Row of the per-candidate sweep report.
struct SweepEntry {
  std::size_t candidate_index = 0;
  OperatorSet opset;
  double loss = 0.0;
  double seconds = 0.0;
  bool ok = false;
  std::string reason;
};

template <typename Params>
struct SweepResult {
  std::vector<double> losses;  // by candidate_index; +inf for failures
  std::vector<SweepEntry> entries;
  std::size_t winner_index = 0;
  std::optional<Params> winner_params;
  std::vector<CandidateFailure> failures;
  std::size_t completed = 0;

  bool all_failed() const noexcept { return !winner_params.has_value(); }
};

// Worker count: GOPFORGE_WORKERS when set to a positive integer, otherwise
// `requested`, otherwise 1.
std::size_t resolve_workers(std::optional<std::size_t> requested);

namespace detail {

inline bool is_deterministic_failure(const std::exception_ptr& e) {
  try {
    std::rethrow_exception(e);
  } catch (const TrainingError&) {
    return true;
  } catch (const ValidationError&) {
    return true;
  } catch (...) {
    return false;
  }
}

inline std::string describe(const std::exception_ptr& e) {
  try {
    std::rethrow_exception(e);
  } catch (const std::exception& ex) {
    return ex.what();
  } catch (...) {
    return "unknown exception";
  }
}

}  // namespace detail

// Runs every job exactly once on `workers` threads and reduces to the
// argmin loss, lowest candidate_index winning ties. Divergence and
// validation failures score +inf immediately; any other exception is retried
// once before being recorded. The result does not depend on `workers` or on
// the order of `jobs`.
template <typename Params, typename TrainFn>
SweepResult<Params> run_sweep(std::span<const CandidateJob> jobs, TrainFn&& train,
                              std::size_t workers) {
  if (jobs.empty()) throw ValidationError("run_sweep: no jobs");
  if (workers < 1) throw ValidationError("run_sweep: workers must be >= 1");
  const std::size_t n = jobs.size();
  std::vector<char> seen(n, 0);
  for (const auto& j : jobs) {
    if (j.candidate_index >= n || seen[j.candidate_index])
      throw ValidationError("run_sweep: candidate indices must be a permutation of [0, n)");
    seen[j.candidate_index] = 1;
  }

  std::vector<std::optional<CandidateOutcome<Params>>> slots(n);
  std::vector<SweepEntry> entries(n);
  std::atomic<std::size_t> next{0};

  auto work = [&] {
    for (;;) {
      const std::size_t pos = next.fetch_add(1);
      if (pos >= n) return;
      const CandidateJob& job = jobs[pos];
      SweepEntry& entry = entries[job.candidate_index];
      entry.candidate_index = job.candidate_index;
      entry.opset = job.opset;
      const auto t0 = std::chrono::steady_clock::now();
      for (int attempt = 0; attempt < 2; ++attempt) {
        try {
          CandidateOutcome<Params> out = train(job);
          if (!std::isfinite(out.loss)) {
            entry.reason = "non-finite loss";
            break;
          }
          slots[job.candidate_index] = std::move(out);
          entry.reason.clear();
          break;
        } catch (...) {
          const auto e = std::current_exception();
          entry.reason = detail::describe(e);
          if (detail::is_deterministic_failure(e)) break;
        }
      }
      entry.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    }
  };

  const std::size_t threads = std::min(workers, n);
  if (threads == 1) {
    work();
  } else {
    std::vector<std::jthread> pool;
    pool.reserve(threads);
    for (std::size_t t = 0; t < threads; ++t) pool.emplace_back(work);
  }

  SweepResult<Params> result;
  result.losses.assign(n, std::numeric_limits<double>::infinity());
  std::optional<std::size_t> best;
  for (std::size_t i = 0; i < n; ++i) {
    SweepEntry& entry = entries[i];
    if (slots[i]) {
      entry.ok = true;
      entry.loss = slots[i]->loss;
      result.losses[i] = slots[i]->loss;
      ++result.completed;
      if (!best || result.losses[i] < result.losses[*best]) best = i;
    } else {
      entry.ok = false;
      entry.loss = std::numeric_limits<double>::infinity();
      result.failures.push_back({i, entry.reason});
    }
  }
  result.entries = std::move(entries);
  if (best) {
    result.winner_index = *best;
    result.winner_params = std::move(slots[*best]->params);
  }
  return result;
}

}  // namespace gopforge
