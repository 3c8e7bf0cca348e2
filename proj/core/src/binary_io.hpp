// SPDX-License-Identifier: Apache-2.0
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
// http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
// ------------------------------------------------------------------------

// Little-endian binary helpers shared by the codebook, trajectory and
// network file formats.

#pragma once

#include <Eigen/Dense>

#include <array>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <string>
#include <string_view>

namespace grassq::io {

class BinaryWriter {
  public:
    explicit BinaryWriter(const std::filesystem::path& path);
    void bytes(std::string_view raw);
    void u32(std::uint32_t v);
    void u64(std::uint64_t v);
    void f64(double v);
    void complex_matrix(const Eigen::MatrixXcd& m); // column-major (re, im) pairs
    void real_matrix(const Eigen::MatrixXd& m);     // column-major
    void finish();

  private:
    std::filesystem::path path_;
    std::ofstream out_;
};

class BinaryReader {
  public:
    explicit BinaryReader(const std::filesystem::path& path);
    void expect_magic(std::string_view magic);
    std::uint32_t u32();
    std::uint64_t u64();
    double f64();
    Eigen::MatrixXcd complex_matrix(Eigen::Index rows, Eigen::Index cols);
    Eigen::MatrixXd real_matrix(Eigen::Index rows, Eigen::Index cols);
    /// Throws FormatError if unread bytes remain.
    void expect_end();
    const std::filesystem::path& path() const { return path_; }

  private:
    void read(char* dst, std::size_t n);
    std::filesystem::path path_;
    std::ifstream in_;
};

} // namespace grassq::io
