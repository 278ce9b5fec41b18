// Copyright (c) 2026 The nsvsynth Authors
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
#pragma once

#include <complex>
#include <span>
#include <vector>

namespace nsv {

using Complex = std::complex<double>;

bool is_power_of_two(std::size_t n);

// In-place iterative radix-2 transform. Length must be a power of two.
// The inverse is scaled by 1/n.
void fft_inplace(std::span<Complex> data, bool inverse = false);

// Real input of length n (power of two) -> n/2+1 non-negative frequency bins.
std::vector<Complex> rfft(std::span<const double> input);

// Inverse of rfft: n/2+1 bins -> n real samples (Hermitian symmetry implied).
std::vector<double> irfft(std::span<const Complex> bins, std::size_t n);

}  // namespace nsv
