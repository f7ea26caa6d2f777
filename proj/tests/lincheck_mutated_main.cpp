/*
 * Copyright 2026 The wfext Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

// Trial runner linked against the library variant whose exactly-once guard
// is compiled out. A healthy checker must catch the resulting double
// executions; this binary exists so the test suite can prove that it does.

#include <cstdio>
#include <cstdlib>
#include <cstring>

#include "wfext/lincheck.hpp"

int main(int argc, char** argv) {
  std::uint64_t seed0 = 1;
  unsigned trials = 1000;
  for (int i = 1; i + 1 < argc; i += 2) {
    if (std::strcmp(argv[i], "--seed0") == 0) seed0 = std::strtoull(argv[i + 1], nullptr, 10);
    if (std::strcmp(argv[i], "--trials") == 0) {
      trials = static_cast<unsigned>(std::strtoul(argv[i + 1], nullptr, 10));
    }
  }

  wfext::lincheck::config cfg;
  cfg.threads = 3;
  cfg.ops_per_thread = 4;
  cfg.key_space = 4;
  cfg.bucket_capacity = 2;
  cfg.seed = seed0;

  const auto sum = wfext::lincheck::run_trials(cfg, trials);
  std::printf("trials=%u failures=%u first_seed=%llu\n", sum.trials, sum.failures,
              static_cast<unsigned long long>(sum.first_failing_seed));
  if (sum.failures > 0) {
    std::printf("%s", wfext::lincheck::describe(sum.first_failure).c_str());
  }
  return 0;
}
