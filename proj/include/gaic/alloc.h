// Copyright 2026 The GAIC Authors.
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
#pragma once

namespace gaic {

// Keeps large tensor buffers on the heap instead of fresh mmap regions.
// Without it every im2col or activation buffer above glibc's threshold is
// mapped and page-faulted again on each forward pass, which can triple the
// backbone time. Call once at program start; a no-op on other C libraries.
void KeepLargeBuffersOnHeap();

}  // namespace gaic
