/*
 * Copyright 2026 The curreg Authors
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

#include <atomic>
#include <cstdlib>
#include <string>

#include "curreg/error.hpp"
#include "curreg/kernels.hpp"

namespace curreg::kernels {

#if defined(CURREG_HAVE_AVX2)
const KernelTable* avx2_table_impl();
#endif

const KernelTable* avx2_table() {
#if defined(CURREG_HAVE_AVX2)
  static const bool supported = __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
  return supported ? avx2_table_impl() : nullptr;
#else
  return nullptr;
#endif
}

bool isa_available(Isa isa) { return isa == Isa::kScalar || avx2_table() != nullptr; }

const KernelTable& table_for(Isa isa) {
  if (isa == Isa::kScalar) return scalar_table();
  const KernelTable* t = avx2_table();
  if (!t) throw ConfigError("AVX2 kernels are not available on this machine/build");
  return *t;
}

std::string_view isa_name(Isa isa) { return isa == Isa::kScalar ? "scalar" : "avx2"; }

namespace {

const KernelTable* initial_table() {
  if (const char* env = std::getenv("CURREG_ISA")) {
    const std::string want(env);
    if (want == "scalar") return &scalar_table();
    if (want == "avx2" && avx2_table()) return avx2_table();
  }
  if (const KernelTable* t = avx2_table()) return t;
  return &scalar_table();
}

std::atomic<const KernelTable*>& active_slot() {
  static std::atomic<const KernelTable*> slot{initial_table()};
  return slot;
}

}  // namespace

const KernelTable& active() { return *active_slot().load(std::memory_order_relaxed); }

void set_active(Isa isa) { active_slot().store(&table_for(isa)); }

}  // namespace curreg::kernels
