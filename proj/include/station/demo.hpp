// Copyright 2026 The Data Station Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <filesystem>
#include <string>
#include <vector>

namespace station {

struct DemoStep {
  std::string name;
  std::string detail;
};

struct DemoReport {
  std::vector<DemoStep> steps;
  std::string audit_log;
  std::string released_body;
  /// Every step reached its expected state.
  bool completed = false;
};

/// Scripted end-to-end run over the demo corpus with fixed seeds and a
/// frozen clock: upload, capsule, block on a join choice, answer, approve,
/// release. `workdir` must be empty or absent.
DemoReport run_demo(const std::filesystem::path& workdir, const std::filesystem::path& data_dir,
                    const std::filesystem::path& capsule_path);

}  // namespace station
