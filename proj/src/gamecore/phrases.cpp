// SPDX-License-Identifier: Apache-2.0
#include "sketchwatch/gamecore/phrases.hpp"

#include "sketchwatch/common/error.hpp"

#include <algorithm>
#include <array>
#include <string_view>

namespace sketchwatch::gamecore {

PhraseDictionary::PhraseDictionary(std::vector<PhraseEntry> entries)
{
    for (auto &e : entries)
        add(std::move(e.phrase), e.part_of_speech, e.selection_count);
}

void PhraseDictionary::add(std::string phrase, PartOfSpeech pos, std::uint64_t selection_count)
{
    auto it = std::find_if(entries_.begin(), entries_.end(), [&](const auto &e) { return e.phrase == phrase; });
    if (it != entries_.end())
        throw Error(Errc::invalid_argument, "duplicate phrase '" + phrase + "'");
    entries_.push_back({std::move(phrase), pos, selection_count});
}

std::uint64_t PhraseDictionary::count_of(const std::string &phrase) const
{
    for (const auto &e : entries_)
        if (e.phrase == phrase)
            return e.selection_count;
    throw Error(Errc::not_found, "unknown phrase '" + phrase + "'");
}

double unit_uniform(std::mt19937_64 &rng)
{
    return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

const std::string &PhraseDictionary::sample(std::mt19937_64 &rng)
{
    if (entries_.empty())
        throw Error(Errc::invalid_argument, "cannot sample from an empty dictionary");

    double total = 0.0;
    for (const auto &e : entries_)
        total += 1.0 / (1.0 + static_cast<double>(e.selection_count));

    const double target = unit_uniform(rng) * total;
    double acc = 0.0;
    std::size_t chosen = entries_.size() - 1;
    for (std::size_t i = 0; i < entries_.size(); ++i) {
        acc += 1.0 / (1.0 + static_cast<double>(entries_[i].selection_count));
        if (target < acc) {
            chosen = i;
            break;
        }
    }
    ++entries_[chosen].selection_count;
    return entries_[chosen].phrase;
}

std::string sample_phrase(PhraseDictionary &dict, std::uint64_t seed)
{
    std::mt19937_64 rng(seed);
    return dict.sample(rng);
}

namespace {

// clang-format off
constexpr std::array<std::string_view, 140> nouns = {
    "airplane", "bee", "chair", "apple", "anchor", "ant", "balloon", "banana", "basket", "bat",
    "bed", "bell", "bicycle", "bird", "boat", "book", "bottle", "bowl", "bread", "bridge",
    "broom", "brush", "bucket", "butterfly", "cake", "camel", "camera", "candle", "car", "carrot",
    "castle", "cat", "chicken", "clock", "cloud", "comb", "cow", "crab", "crown", "cup",
    "deer", "desk", "dog", "dolphin", "door", "dragon", "drum", "duck", "eagle", "ear",
    "elephant", "envelope", "eye", "feather", "fence", "fish", "flag", "flower", "fork", "fox",
    "frog", "giraffe", "glasses", "glove", "goat", "guitar", "hammer", "hat", "helicopter", "horse",
    "house", "igloo", "island", "jacket", "kangaroo", "key", "kite", "knife", "ladder", "lamp",
    "leaf", "lemon", "lighthouse", "lion", "lock", "map", "mask", "moon", "mountain", "mouse",
    "mushroom", "nest", "octopus", "owl", "paintbrush", "panda", "parrot", "pear", "pencil", "penguin",
    "piano", "pig", "pillow", "pineapple", "pizza", "rabbit", "rainbow", "robot", "rocket", "sandwich",
    "scissors", "shark", "sheep", "ship", "shoe", "snail", "snake", "snowman", "spider", "spoon",
    "star", "sun", "sword", "table", "teapot", "tent", "tiger", "toothbrush", "tractor", "train",
    "tree", "truck", "turtle", "umbrella", "violin", "volcano", "watch", "whale", "windmill", "zebra",
};

constexpr std::array<std::string_view, 35> verbs = {
    "catch", "call", "hang", "climb", "dance", "dig", "dive", "drink", "drive", "eat",
    "fall", "swing", "fly", "jump", "kick", "kiss", "knock", "laugh", "listen", "paint",
    "pull", "push", "read", "ride", "run", "sing", "sit", "sleep", "swim", "think",
    "throw", "walk", "wash", "wave", "write",
};

constexpr std::array<std::string_view, 25> adjectives = {
    "happy", "lazy", "scary", "angry", "big", "bright", "cold", "curly", "dark", "empty",
    "fast", "full", "heavy", "hot", "hungry", "loud", "old", "round", "sad", "sharp",
    "sleepy", "small", "tall", "tired", "wet",
};
// clang-format on

} // namespace

PhraseDictionary default_dictionary()
{
    PhraseDictionary dict;
    for (auto w : nouns)
        dict.add(std::string(w), PartOfSpeech::Noun);
    for (auto w : verbs)
        dict.add(std::string(w), PartOfSpeech::Verb);
    for (auto w : adjectives)
        dict.add(std::string(w), PartOfSpeech::Adjective);
    return dict;
}

} // namespace sketchwatch::gamecore
