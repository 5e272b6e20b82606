// Copyright 2026 The covrnn Authors
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
#ifndef COVRNN_TOOLS_CLI_H_
#define COVRNN_TOOLS_CLI_H_

#include <iosfwd>

namespace covrnn {

inline constexpr int kExitOk = 0;
inline constexpr int kExitError = 1;
inline constexpr int kExitLocalMinimum = 2;

/// Entry point of the `covrnn` tool. Exit status: 0 on closure or clean
/// completion, 2 when a campaign stops in a local minimum, 1 on errors.
int cli_main(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace covrnn

#endif  // COVRNN_TOOLS_CLI_H_
