// Copyright (c) 2026 The wst Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef WST_ERRORS_H_
#define WST_ERRORS_H_

#include <stdexcept>
#include <string>

namespace wst {

// Bad input supplied by the caller: malformed arguments, files or specs.
class ValidationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A corpus item violates the on-disk contract. The message names the item.
class CorpusError : public ValidationError {
 public:
  CorpusError(const std::string& utterance_id, const std::string& what)
      : ValidationError(utterance_id + ": " + what), utterance_id_(utterance_id) {}
  const std::string& utterance_id() const { return utterance_id_; }

 private:
  std::string utterance_id_;
};

// Training diverged or otherwise failed at run time.
class TrainingError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace wst

#endif  // WST_ERRORS_H_
