// Copyright 2026 The OMPQ Authors
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

#ifndef OMPQ_CLI_H_
#define OMPQ_CLI_H_

#include <iosfwd>
#include <string>
#include <vector>

namespace ompq {

// Process exit statuses.
inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 2;
inline constexpr int kExitData = 3;
inline constexpr int kExitInfeasible = 4;

// Runs the `ompq` command line. args[0] is the program name.
//
//   orm      --activations PATH --out PATH [--strategy auto|norm|gram]
//            [--workers N]
//   allocate --orm PATH --model PATH --target-size MB [--beta F]
//            [--importance exp|neglog|neg|negcube|negexp]
//            [--granularity layer|block|stage|net] [--bits MIN:MAX]
//            [--abit N] [--method auto|round|dfs] [--report PATH]
//            [--heatmap PATH]
//   toynet   --seed N --dims D0,D1,... --samples N --out-dump PATH
//            --out-model PATH [--block-size K]
//   bench    --n N --p P --repeats R
//
// OMPQ_WORKERS, when set, overrides --workers.
int run_cli(const std::vector<std::string>& args, std::ostream& out,
            std::ostream& err);

}  // namespace ompq

#endif  // OMPQ_CLI_H_
