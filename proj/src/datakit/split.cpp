// SPDX-License-Identifier: Apache-2.0
#include "sketchwatch/datakit/split.hpp"

#include "sketchwatch/common/error.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <map>
#include <random>

namespace sketchwatch::datakit {

std::string_view to_string(SplitName s)
{
    switch (s) {
    case SplitName::Train:
        return "train";
    case SplitName::Val:
        return "val";
    case SplitName::Test:
        return "test";
    }
    return "train";
}

SplitName split_name_from_string(std::string_view s)
{
    if (s == "train")
        return SplitName::Train;
    if (s == "val")
        return SplitName::Val;
    if (s == "test")
        return SplitName::Test;
    throw Error(Errc::malformed, "unknown split '" + std::string(s) + "'");
}

void SplitSpec::validate() const
{
    if (train < 0 || val < 0 || test < 0 || std::abs(train + val + test - 1.0) > 1e-9)
        throw Error(Errc::invalid_argument, "split ratios must be non-negative and sum to 1");
}

namespace {

std::uint64_t fnv1a(const std::string &s)
{
    std::uint64_t h = 0xcbf29ce484222325ull;
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001b3ull;
    }
    return h;
}

} // namespace

SplitResult split(std::span<const SplitKey> keys, const SplitSpec &spec)
{
    spec.validate();
    std::map<std::pair<std::string, bool>, std::vector<std::size_t>> groups;
    for (std::size_t i = 0; i < keys.size(); ++i)
        groups[{keys[i].phrase, keys[i].has_annotations}].push_back(i);

    SplitResult out;
    for (auto &[key, members] : groups) {
        std::sort(members.begin(), members.end(),
                  [&](std::size_t a, std::size_t b) { return keys[a].id < keys[b].id; });
        std::mt19937_64 rng(spec.seed ^ (fnv1a(key.first) + (key.second ? 0x9e3779b97f4a7c15ull : 0)));
        // Fisher-Yates with explicit bounded draws so the order only depends on the engine.
        for (std::size_t i = members.size(); i > 1; --i) {
            const std::size_t j = static_cast<std::size_t>(rng() % i);
            std::swap(members[i - 1], members[j]);
        }
        const std::size_t n = members.size();
        std::array<std::size_t, 3> sizes{static_cast<std::size_t>(std::floor(spec.train * n + 1e-9)),
                                         static_cast<std::size_t>(std::floor(spec.val * n + 1e-9)),
                                         static_cast<std::size_t>(std::floor(spec.test * n + 1e-9))};
        std::size_t left = n - (sizes[0] + sizes[1] + sizes[2]);
        for (std::size_t k = 0; left > 0; k = (k + 1) % 3) {
            ++sizes[k];
            --left;
        }
        std::size_t at = 0;
        for (std::size_t part = 0; part < 3; ++part) {
            auto &dst = part == 0 ? out.train : part == 1 ? out.val : out.test;
            for (std::size_t k = 0; k < sizes[part]; ++k)
                dst.push_back(members[at++]);
        }
    }
    std::sort(out.train.begin(), out.train.end());
    std::sort(out.val.begin(), out.val.end());
    std::sort(out.test.begin(), out.test.end());
    return out;
}

SplitResult split(std::span<const AnnotatedSession> sessions, const SplitSpec &spec)
{
    std::vector<SplitKey> keys;
    keys.reserve(sessions.size());
    for (const auto &s : sessions)
        keys.push_back({s.phrase, s.has_annotations(), s.session_id});
    return split(keys, spec);
}

} // namespace sketchwatch::datakit
