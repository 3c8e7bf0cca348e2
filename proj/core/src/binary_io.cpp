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

#include "binary_io.hpp"

#include <algorithm>
#include <bit>
#include <cstring>

#include "grassq/errors.hpp"

namespace grassq::io {

namespace {

template <typename T>
std::array<char, sizeof(T)> to_le(T v)
{
    std::array<char, sizeof(T)> raw{};
    std::memcpy(raw.data(), &v, sizeof(T));
    if constexpr (std::endian::native == std::endian::big) std::reverse(raw.begin(), raw.end());
    return raw;
}

template <typename T>
T from_le(std::array<char, sizeof(T)> raw)
{
    if constexpr (std::endian::native == std::endian::big) std::reverse(raw.begin(), raw.end());
    T v;
    std::memcpy(&v, raw.data(), sizeof(T));
    return v;
}

} // namespace

BinaryWriter::BinaryWriter(const std::filesystem::path& path) : path_(path), out_(path, std::ios::binary)
{
    if (!out_) throw IoError("cannot open '" + path.string() + "' for writing");
}

void BinaryWriter::bytes(std::string_view raw) { out_.write(raw.data(), static_cast<std::streamsize>(raw.size())); }

void BinaryWriter::u32(std::uint32_t v)
{
    const auto raw = to_le(v);
    out_.write(raw.data(), raw.size());
}

void BinaryWriter::u64(std::uint64_t v)
{
    const auto raw = to_le(v);
    out_.write(raw.data(), raw.size());
}

void BinaryWriter::f64(double v)
{
    const auto raw = to_le(v);
    out_.write(raw.data(), raw.size());
}

void BinaryWriter::complex_matrix(const Eigen::MatrixXcd& m)
{
    for (Eigen::Index j = 0; j < m.cols(); ++j)
        for (Eigen::Index i = 0; i < m.rows(); ++i) {
            f64(m(i, j).real());
            f64(m(i, j).imag());
        }
}

void BinaryWriter::real_matrix(const Eigen::MatrixXd& m)
{
    for (Eigen::Index j = 0; j < m.cols(); ++j)
        for (Eigen::Index i = 0; i < m.rows(); ++i) f64(m(i, j));
}

void BinaryWriter::finish()
{
    out_.flush();
    if (!out_) throw IoError("write to '" + path_.string() + "' failed");
    out_.close();
}

BinaryReader::BinaryReader(const std::filesystem::path& path) : path_(path), in_(path, std::ios::binary)
{
    if (!in_) throw IoError("cannot open '" + path.string() + "' for reading");
}

void BinaryReader::read(char* dst, std::size_t n)
{
    in_.read(dst, static_cast<std::streamsize>(n));
    if (static_cast<std::size_t>(in_.gcount()) != n)
        throw FormatError("'" + path_.string() + "' is truncated or corrupt");
}

void BinaryReader::expect_magic(std::string_view magic)
{
    std::string raw(magic.size(), '\0');
    read(raw.data(), raw.size());
    if (raw != magic) throw FormatError("'" + path_.string() + "' has the wrong file signature");
}

std::uint32_t BinaryReader::u32()
{
    std::array<char, 4> raw{};
    read(raw.data(), raw.size());
    return from_le<std::uint32_t>(raw);
}

std::uint64_t BinaryReader::u64()
{
    std::array<char, 8> raw{};
    read(raw.data(), raw.size());
    return from_le<std::uint64_t>(raw);
}

double BinaryReader::f64()
{
    std::array<char, 8> raw{};
    read(raw.data(), raw.size());
    return from_le<double>(raw);
}

Eigen::MatrixXcd BinaryReader::complex_matrix(Eigen::Index rows, Eigen::Index cols)
{
    Eigen::MatrixXcd m(rows, cols);
    for (Eigen::Index j = 0; j < cols; ++j)
        for (Eigen::Index i = 0; i < rows; ++i) {
            const double re = f64();
            const double im = f64();
            m(i, j) = {re, im};
        }
    return m;
}

Eigen::MatrixXd BinaryReader::real_matrix(Eigen::Index rows, Eigen::Index cols)
{
    Eigen::MatrixXd m(rows, cols);
    for (Eigen::Index j = 0; j < cols; ++j)
        for (Eigen::Index i = 0; i < rows; ++i) m(i, j) = f64();
    return m;
}

void BinaryReader::expect_end()
{
    if (in_.peek() != std::char_traits<char>::eof())
        throw FormatError("'" + path_.string() + "' has trailing data");
}

} // namespace grassq::io
