// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <vector>

namespace sketchwatch::gamecore {

enum class PartOfSpeech { Noun, Verb, Adjective };

struct PhraseEntry {
    std::string phrase;
    PartOfSpeech part_of_speech = PartOfSpeech::Noun;
    std::uint64_t selection_count = 0;
};

class PhraseDictionary {
public:
    PhraseDictionary() = default;
    explicit PhraseDictionary(std::vector<PhraseEntry> entries);

    /// Throws Error(invalid_argument) on a duplicate phrase.
    void add(std::string phrase, PartOfSpeech pos, std::uint64_t selection_count = 0);

    const std::vector<PhraseEntry> &entries() const { return entries_; }
    std::size_t size() const { return entries_.size(); }
    bool empty() const { return entries_.empty(); }
    std::uint64_t count_of(const std::string &phrase) const;

    /// Inverse-frequency draw: weight 1 / (1 + selection_count). Bumps the
    /// winner's count. Throws Error(invalid_argument) when empty.
    const std::string &sample(std::mt19937_64 &rng);

private:
    std::vector<PhraseEntry> entries_;
};

/// Seeded convenience wrapper around PhraseDictionary::sample.
std::string sample_phrase(PhraseDictionary &dict, std::uint64_t seed);

/// The stock 200-phrase dictionary (nouns, verbs and adjectives).
PhraseDictionary default_dictionary();

/// Uniform double in [0, 1) from the top 53 bits of one engine draw.
double unit_uniform(std::mt19937_64 &rng);

} // namespace sketchwatch::gamecore
