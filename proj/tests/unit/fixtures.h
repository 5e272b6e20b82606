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
#ifndef COVRNN_TESTS_UNIT_FIXTURES_H_
#define COVRNN_TESTS_UNIT_FIXTURES_H_

#include <filesystem>
#include <random>
#include <string>

namespace covrnn::testing {

// Two-level fragment: isa picks an operand-count class, 2_operands picks an
// opcode. 3_operands is a leaf so that the fragment is a complete ISA.
inline constexpr const char* kFragment = R"(
set isa { 2_operands 3_operands }
set 2_operands { i_LUI i_ADDI }
element i_LUI
element i_ADDI
element 3_operands
)";

inline std::filesystem::path toy_isa_path() { return COVRNN_TOY_ISA; }
inline std::filesystem::path test_data(const std::string& name) {
  return std::filesystem::path(COVRNN_TEST_DATA_DIR) / name;
}

// Fresh scratch directory under the system temp dir, removed on destruction.
class ScratchDir {
 public:
  explicit ScratchDir(const std::string& tag) {
    std::random_device rd;
    path_ = std::filesystem::temp_directory_path() /
            ("covrnn_" + tag + "_" + std::to_string(rd()));
    std::filesystem::create_directories(path_);
  }
  ~ScratchDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  ScratchDir(const ScratchDir&) = delete;
  ScratchDir& operator=(const ScratchDir&) = delete;
  const std::filesystem::path& path() const { return path_; }

 private:
  std::filesystem::path path_;
};

}  // namespace covrnn::testing

#endif  // COVRNN_TESTS_UNIT_FIXTURES_H_
