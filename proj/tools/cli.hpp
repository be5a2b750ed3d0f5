/*
 * Copyright (c) 2026 the nf4quant authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *    http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#ifndef NF4_CLI_HPP
#define NF4_CLI_HPP

namespace nf4
{

/// Entry point behind the nf4quant binary. Exit codes: 0 success, 1 domain error
/// (invalid shapes, bad files), 2 usage error.
int run_cli(int argc, const char *const *argv);

} // namespace nf4

#endif // NF4_CLI_HPP
