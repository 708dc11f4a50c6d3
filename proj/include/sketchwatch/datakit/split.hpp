// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "sketchwatch/datakit/annotated.hpp"

#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace sketchwatch::datakit {

enum class SplitName { Train, Val, Test };
std::string_view to_string(SplitName s);
SplitName split_name_from_string(std::string_view s);

struct SplitSpec {
    double train = 0.70;
    double val = 0.15;
    double test = 0.15;
    std::uint64_t seed = 0;

    void validate() const;
};

/// Indices into the input, each list sorted ascending.
struct SplitResult {
    std::vector<std::size_t> train;
    std::vector<std::size_t> val;
    std::vector<std::size_t> test;
};

/// Splits each (phrase, has-annotations) group separately and combines the parts.
/// Group sizes are floored; leftovers go to train, val, test in turn. Members are
/// ordered by session id before shuffling, so input order does not matter.
SplitResult split(std::span<const AnnotatedSession> sessions, const SplitSpec &spec);

/// Same rule on bare keys: phrase, annotation flag and a unique id per item.
struct SplitKey {
    std::string phrase;
    bool has_annotations = false;
    std::string id;
};
SplitResult split(std::span<const SplitKey> keys, const SplitSpec &spec);

} // namespace sketchwatch::datakit
