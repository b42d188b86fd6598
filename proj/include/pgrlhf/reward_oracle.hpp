// Copyright 2026 The pgrlhf Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef PGRLHF_REWARD_ORACLE_HPP_
#define PGRLHF_REWARD_ORACLE_HPP_

#include <atomic>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace pgrlhf {

// Raised when the true reward is read outside a sanctioned scope while the
// handle is poisoned.
class RewardIsolationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// The only path to the hidden true reward r(s, a). Every read is counted.
// When poisoned, reads are allowed only inside a PreferenceScope on the
// calling thread (the preference oracle opens one around each comparison).
class RewardOracleHandle {
 public:
  RewardOracleHandle(int num_states, int num_actions,
                     std::vector<double> table);

  int num_states() const { return num_states_; }
  int num_actions() const { return num_actions_; }

  double observe(int s, int a) const;

  void set_poisoned(bool poisoned) { poisoned_.store(poisoned); }
  bool poisoned() const { return poisoned_.load(); }

  // Reads made inside a preference scope.
  std::uint64_t preference_reads() const { return preference_reads_.load(); }
  // Reads made anywhere else; for pg_rlhf this must stay at zero.
  std::uint64_t direct_reads() const { return direct_reads_.load(); }

  // RAII marker for "inside sample_comparison" on this thread.
  class PreferenceScope {
   public:
    PreferenceScope();
    ~PreferenceScope();
    PreferenceScope(const PreferenceScope&) = delete;
    PreferenceScope& operator=(const PreferenceScope&) = delete;

   private:
    bool previous_;
  };

 private:
  int num_states_;
  int num_actions_;
  std::vector<double> table_;
  std::atomic<bool> poisoned_{false};
  mutable std::atomic<std::uint64_t> preference_reads_{0};
  mutable std::atomic<std::uint64_t> direct_reads_{0};
};

}  // namespace pgrlhf

#endif  // PGRLHF_REWARD_ORACLE_HPP_
