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

#include "grassq/config.hpp"

#include <algorithm>
#include <charconv>
#include <cstdio>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>

#include "grassq/errors.hpp"

namespace grassq {

namespace {

std::string_view trim(std::string_view s)
{
    const auto first = s.find_first_not_of(" \t\r");
    if (first == std::string_view::npos) return {};
    const auto last = s.find_last_not_of(" \t\r");
    return s.substr(first, last - first + 1);
}

std::string format_double(double v)
{
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

template <typename T>
T parse_integer(std::string_view text, const std::string& where)
{
    T value{};
    const auto* end = text.data() + text.size();
    const auto [ptr, ec] = std::from_chars(text.data(), end, value);
    if (ec != std::errc() || ptr != end) throw ConfigError(where + ": expected an integer, got '" + std::string(text) + "'");
    return value;
}

double parse_real(std::string_view text, const std::string& where)
{
    const std::string s(text);
    std::size_t used = 0;
    double v = 0.0;
    try {
        v = std::stod(s, &used);
    } catch (const std::exception&) {
        used = 0;
    }
    if (used != s.size() || s.empty()) throw ConfigError(where + ": expected a number, got '" + s + "'");
    return v;
}

bool parse_bool(std::string_view text, const std::string& where)
{
    if (text == "true" || text == "on" || text == "yes" || text == "1") return true;
    if (text == "false" || text == "off" || text == "no" || text == "0") return false;
    throw ConfigError(where + ": expected true/false, got '" + std::string(text) + "'");
}

std::vector<double> parse_list(std::string_view text, const std::string& where)
{
    std::vector<double> out;
    while (!text.empty()) {
        const auto comma = text.find(',');
        const std::string_view item = trim(text.substr(0, comma));
        if (item.empty()) throw ConfigError(where + ": empty list element");
        out.push_back(parse_real(item, where));
        if (comma == std::string_view::npos) break;
        text.remove_prefix(comma + 1);
    }
    return out;
}

} // namespace

std::string_view to_string(Scenario s)
{
    switch (s) {
    case Scenario::single_stage_memoryless: return "single_stage_memoryless";
    case Scenario::single_stage_selective: return "single_stage_selective";
    case Scenario::multistage_full: return "multistage_full";
    case Scenario::multistage_selective: return "multistage_selective";
    case Scenario::classifier_eval: return "classifier_eval";
    case Scenario::stage_table: return "stage_table";
    }
    return "unknown";
}

Scenario parse_scenario(std::string_view name)
{
    for (Scenario s : {Scenario::single_stage_memoryless, Scenario::single_stage_selective, Scenario::multistage_full,
                       Scenario::multistage_selective, Scenario::classifier_eval, Scenario::stage_table})
        if (to_string(s) == name) return s;
    throw ConfigError("unknown scenario '" + std::string(name) + "'");
}

bool ExperimentConfig::is_selective() const noexcept
{
    return scenario == Scenario::single_stage_selective || scenario == Scenario::multistage_selective;
}

bool ExperimentConfig::is_sweep() const noexcept
{
    return scenario != Scenario::classifier_eval && scenario != Scenario::stage_table;
}

bool ExperimentConfig::is_multistage() const noexcept
{
    return scenario != Scenario::single_stage_memoryless && scenario != Scenario::single_stage_selective;
}

void ExperimentConfig::validate() const
{
    if (m < 1 || n < 1) throw ConfigError("n and m are required and must be positive");
    if (is_multistage()) {
        if (n <= m) throw ConfigError("multistage scenarios need n > m");
        if (bits < 1 || bits > kMaxStageBits)
            throw ConfigError("bits (per stage) must lie in [1, " + std::to_string(kMaxStageBits) + "]");
    } else {
        if (n <= m) throw ConfigError("single-stage scenarios need n > m");
        if (bits < 1 || bits > kMaxFlatBits)
            throw ConfigError("bits must lie in [1, " + std::to_string(kMaxFlatBits) + "] for a flat codebook");
    }
    if (is_sweep()) {
        if (dopplers.empty()) throw ConfigError("dopplers is required for scenario " + std::string(to_string(scenario)));
        for (double v : dopplers)
            if (!(v >= 0.0)) throw ConfigError("doppler values must be nonnegative");
        if (length < 1) throw ConfigError("length must be at least 1");
        if (trajectories < 1) throw ConfigError("trajectories must be at least 1");
        if (channel == ChannelModel::clarke_sos && sinusoids < 8) throw ConfigError("sinusoids must be at least 8");
    }
    if (is_selective()) {
        if (!(hysteresis.lower >= 1.0 && hysteresis.upper >= hysteresis.lower))
            throw ConfigError("selective scenarios need 1 <= c_l <= c_u");
        if (length <= warmup) throw ConfigError("length must exceed warmup for selective scenarios");
    }
    if (!is_sweep() && samples < 1) throw ConfigError("samples must be at least 1");
    if ((classifier || scenario == Scenario::classifier_eval) && networks.empty())
        throw ConfigError("networks directory is required when the classifier is used");
    if (classifier && !is_multistage()) throw ConfigError("the classifier only drives multistage scenarios");
    if (m > 1 && calibration_samples < 2) throw ConfigError("calibration_samples must be at least 2");
}

std::string ExperimentConfig::canonical_text() const
{
    std::map<std::string, std::string> kv;
    kv["scenario"] = std::string(to_string(scenario));
    kv["n"] = std::to_string(n);
    kv["m"] = std::to_string(m);
    kv["bits"] = std::to_string(bits);
    std::string list;
    for (std::size_t i = 0; i < dopplers.size(); ++i) list += (i ? "," : "") + format_double(dopplers[i]);
    kv["dopplers"] = list;
    kv["channel"] = std::string(to_string(channel));
    kv["length"] = std::to_string(length);
    kv["trajectories"] = std::to_string(trajectories);
    kv["c_u"] = format_double(hysteresis.upper);
    kv["c_l"] = format_double(hysteresis.lower);
    kv["seed"] = std::to_string(seed);
    kv["codebook_seed"] = std::to_string(codebook_seed);
    kv["classifier"] = classifier ? "true" : "false";
    kv["networks"] = networks;
    kv["warmup"] = std::to_string(warmup);
    kv["sinusoids"] = std::to_string(sinusoids);
    kv["samples"] = std::to_string(samples);
    kv["calibration_samples"] = std::to_string(calibration_samples);
    // output, trace and threads do not change results and stay out of the hash.
    std::string out;
    for (const auto& [k, v] : kv) out += k + "=" + v + "\n";
    return out;
}

std::uint64_t ExperimentConfig::hash() const
{
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : canonical_text()) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

ExperimentConfig parse_config(std::istream& in, std::string_view source)
{
    ExperimentConfig cfg;
    bool have_scenario = false;
    std::map<std::string, int> seen;
    std::string line;
    int line_no = 0;

    using Setter = std::function<void(std::string_view, const std::string&)>;
    const std::map<std::string, Setter, std::less<>> setters = {
        {"scenario", [&](auto v, auto& w) { try { cfg.scenario = parse_scenario(v); } catch (const ConfigError& e) { throw ConfigError(w + ": " + e.what()); } have_scenario = true; }},
        {"n", [&](auto v, auto& w) { cfg.n = parse_integer<Index>(v, w); }},
        {"m", [&](auto v, auto& w) { cfg.m = parse_integer<Index>(v, w); }},
        {"bits", [&](auto v, auto& w) { cfg.bits = parse_integer<int>(v, w); }},
        {"dopplers", [&](auto v, auto& w) { cfg.dopplers = parse_list(v, w); }},
        {"channel", [&](auto v, auto& w) { try { cfg.channel = parse_channel_model(v); } catch (const std::invalid_argument& e) { throw ConfigError(w + ": " + e.what()); } }},
        {"length", [&](auto v, auto& w) { cfg.length = parse_integer<std::size_t>(v, w); }},
        {"trajectories", [&](auto v, auto& w) { cfg.trajectories = parse_integer<std::size_t>(v, w); }},
        {"c_u", [&](auto v, auto& w) { cfg.hysteresis.upper = parse_real(v, w); }},
        {"c_l", [&](auto v, auto& w) { cfg.hysteresis.lower = parse_real(v, w); }},
        {"seed", [&](auto v, auto& w) { cfg.seed = parse_integer<std::uint64_t>(v, w); }},
        {"codebook_seed", [&](auto v, auto& w) { cfg.codebook_seed = parse_integer<std::uint64_t>(v, w); }},
        {"classifier", [&](auto v, auto& w) { cfg.classifier = parse_bool(v, w); }},
        {"networks", [&](auto v, auto&) { cfg.networks = std::string(v); }},
        {"output", [&](auto v, auto&) { cfg.output = std::string(v); }},
        {"trace", [&](auto v, auto&) { cfg.trace = std::string(v); }},
        {"warmup", [&](auto v, auto& w) { cfg.warmup = parse_integer<std::size_t>(v, w); }},
        {"threads", [&](auto v, auto& w) { cfg.threads = parse_integer<std::size_t>(v, w); }},
        {"sinusoids", [&](auto v, auto& w) { cfg.sinusoids = parse_integer<int>(v, w); }},
        {"samples", [&](auto v, auto& w) { cfg.samples = parse_integer<std::size_t>(v, w); }},
        {"calibration_samples", [&](auto v, auto& w) { cfg.calibration_samples = parse_integer<std::size_t>(v, w); }},
    };

    while (std::getline(in, line)) {
        ++line_no;
        std::string_view text = line;
        if (const auto hash = text.find('#'); hash != std::string_view::npos) text = text.substr(0, hash);
        text = trim(text);
        if (text.empty()) continue;
        const std::string where = std::string(source) + ":" + std::to_string(line_no);
        const auto eq = text.find('=');
        if (eq == std::string_view::npos) throw ConfigError(where + ": expected 'key = value'");
        const std::string key(trim(text.substr(0, eq)));
        const std::string_view value = trim(text.substr(eq + 1));
        const auto it = setters.find(key);
        if (it == setters.end()) throw ConfigError(where + ": unknown key '" + key + "'");
        if (auto [prev, inserted] = seen.emplace(key, line_no); !inserted)
            throw ConfigError(where + ": duplicate key '" + key + "' (first set on line " + std::to_string(prev->second) + ")");
        if (value.empty()) throw ConfigError(where + ": missing value for '" + key + "'");
        it->second(value, where);
    }
    if (!have_scenario) throw ConfigError(std::string(source) + ": scenario is required");
    for (const char* key : {"n", "m", "bits"})
        if (!seen.count(key)) throw ConfigError(std::string(source) + ": " + key + " is required");
    cfg.validate();
    return cfg;
}

ExperimentConfig load_config(const std::filesystem::path& path)
{
    std::ifstream in(path);
    if (!in) throw IoError("cannot open config '" + path.string() + "'");
    return parse_config(in, path.string());
}

} // namespace grassq
