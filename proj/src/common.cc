#include <algorithm>
#include <atomic>
#include <cstdlib>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

#include "worldguide/error.h"
#include "worldguide/parallel.h"

namespace worldguide {

std::string_view ErrorCodeName(ErrorCode code) {
  switch (code) {
    case ErrorCode::kInvalidArgument:
      return "InvalidArgument";
    case ErrorCode::kDimensionMismatch:
      return "DimensionMismatch";
    case ErrorCode::kDegenerateDepth:
      return "DegenerateDepth";
    case ErrorCode::kInsufficientInliers:
      return "InsufficientInliers";
    case ErrorCode::kFewerThan3Valid:
      return "FewerThan3Valid";
    case ErrorCode::kDegenerateConfiguration:
      return "DegenerateConfiguration";
    case ErrorCode::kAntiparallelGravity:
      return "AntiparallelGravity";
    case ErrorCode::kNoValidDepth:
      return "NoValidDepth";
    case ErrorCode::kInvalidSpec:
      return "InvalidSpec";
    case ErrorCode::kLengthMismatch:
      return "LengthMismatch";
    case ErrorCode::kDegenerateTrajectory:
      return "DegenerateTrajectory";
    case ErrorCode::kFormatError:
      return "FormatError";
    case ErrorCode::kIoError:
      return "IoError";
  }
  return "Unknown";
}

int ResolveThreadCount(int requested) {
  if (requested > 0) return requested;
  if (const char* env = std::getenv("WORLDGUIDE_THREADS")) {
    const int value = std::atoi(env);
    if (value > 0) return value;
  }
  const unsigned hw = std::thread::hardware_concurrency();
  return hw == 0 ? 1 : static_cast<int>(hw);
}

void ParallelFor(std::size_t count, int threads,
                 const std::function<void(std::size_t)>& body) {
  if (count == 0) return;
  const std::size_t workers = std::min<std::size_t>(
      static_cast<std::size_t>(ResolveThreadCount(threads)), count);
  if (workers <= 1) {
    for (std::size_t i = 0; i < count; ++i) body(i);
    return;
  }

  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  auto worker = [&]() {
    for (;;) {
      const std::size_t i = next.fetch_add(1);
      if (i >= count) return;
      try {
        body(i);
      } catch (...) {
        std::lock_guard<std::mutex> lock(failure_mutex);
        if (!failure) failure = std::current_exception();
        next.store(count);
        return;
      }
    }
  };

  std::vector<std::thread> pool;
  pool.reserve(workers - 1);
  for (std::size_t t = 1; t < workers; ++t) pool.emplace_back(worker);
  worker();
  for (auto& thread : pool) thread.join();
  if (failure) std::rethrow_exception(failure);
}

}  // namespace worldguide
