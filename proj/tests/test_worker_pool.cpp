#include <gtest/gtest.h>

#include <atomic>
#include <optional>
#include <string>
#include <vector>
#include <cstdlib>
#include <stdexcept>

#include "crownbench/errors.hpp"
#include "crownbench/worker_pool.hpp"

using namespace crownbench;

namespace {

class EnvGuard {
 public:
  explicit EnvGuard(const char* value) {
    if (const char* old = std::getenv("CROWNBENCH_WORKERS")) saved_ = old;
    if (value) {
      setenv("CROWNBENCH_WORKERS", value, 1);
    } else {
      unsetenv("CROWNBENCH_WORKERS");
    }
  }
  ~EnvGuard() {
    if (saved_) {
      setenv("CROWNBENCH_WORKERS", saved_->c_str(), 1);
    } else {
      unsetenv("CROWNBENCH_WORKERS");
    }
  }

 private:
  std::optional<std::string> saved_;
};

}  // namespace

TEST(ResolveWorkers, ExplicitRequestWins) {
  EnvGuard env("3");
  EXPECT_EQ(resolve_workers(5), 5u);
}

TEST(ResolveWorkers, EnvironmentOverridesHardwareDefault) {
  EnvGuard env("7");
  EXPECT_EQ(resolve_workers(0), 7u);
}

TEST(ResolveWorkers, HardwareDefaultIsPositive) {
  EnvGuard env(nullptr);
  EXPECT_GE(resolve_workers(0), 1u);
}

TEST(ResolveWorkers, MalformedEnvironmentRejected) {
  for (const char* v : {"zero", "0", "-2", "4x"}) {
    EnvGuard env(v);
    EXPECT_THROW(resolve_workers(0), ValidationError) << v;
  }
}

TEST(ParallelFor, EveryIndexOnce) {
  for (unsigned workers : {1u, 3u, 16u}) {
    std::vector<std::atomic<int>> hits(1000);
    parallel_for(hits.size(), workers, [&](std::size_t i) { hits[i].fetch_add(1); });
    for (const auto& h : hits) ASSERT_EQ(h.load(), 1);
  }
}

TEST(ParallelFor, ZeroItems) {
  int calls = 0;
  parallel_for(0, 4, [&](std::size_t) { ++calls; });
  EXPECT_EQ(calls, 0);
}

TEST(ParallelFor, ExceptionRethrown) {
  EXPECT_THROW(parallel_for(100, 4,
                            [](std::size_t i) {
                              if (i == 42) throw std::runtime_error("boom");
                            }),
               std::runtime_error);
}
