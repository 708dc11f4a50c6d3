// SPDX-License-Identifier: Apache-2.0
#include "sketchwatch/detector/weights_io.hpp"

#include "sketchwatch/common/error.hpp"

#include <array>
#include <bit>
#include <cstring>
#include <fstream>

namespace sketchwatch::detector {

namespace {

constexpr std::array<char, 4> kMagic{'S', 'K', 'W', 'T'};

template <typename T> void put_le(std::ostream &out, T v)
{
    std::array<unsigned char, sizeof(T)> b{};
    for (std::size_t i = 0; i < sizeof(T); ++i)
        b[i] = static_cast<unsigned char>((static_cast<std::uint64_t>(v) >> (8 * i)) & 0xff);
    out.write(reinterpret_cast<const char *>(b.data()), b.size());
}

template <typename T> T get_le(std::istream &in)
{
    std::array<unsigned char, sizeof(T)> b{};
    if (!in.read(reinterpret_cast<char *>(b.data()), b.size()))
        throw Error(Errc::malformed, "weights file truncated");
    std::uint64_t v = 0;
    for (std::size_t i = 0; i < sizeof(T); ++i)
        v |= static_cast<std::uint64_t>(b[i]) << (8 * i);
    return static_cast<T>(v);
}

} // namespace

void save_weights(const Network &net, std::ostream &out)
{
    nlohmann::json header;
    header["format"] = "sketchwatch-weights";
    header["version"] = kWeightsVersion;
    header["net"] = net.config().to_json();
    header["dtype"] = "float32";
    auto &list = header["tensors"] = nlohmann::json::array();
    for (const auto &t : net.tensors())
        list.push_back({{"name", t.name}, {"shape", t.shape}, {"offset", t.offset}, {"count", t.count}});
    const std::string text = header.dump();

    out.write(kMagic.data(), kMagic.size());
    put_le<std::uint32_t>(out, kWeightsVersion);
    put_le<std::uint64_t>(out, text.size());
    out.write(text.data(), static_cast<std::streamsize>(text.size()));
    for (double v : net.parameters())
        put_le<std::uint32_t>(out, std::bit_cast<std::uint32_t>(static_cast<float>(v)));
    if (!out)
        throw Error(Errc::io, "failed writing weights");
}

void save_weights(const Network &net, const std::string &path)
{
    std::ofstream out(path, std::ios::binary);
    if (!out)
        throw Error(Errc::io, "cannot open " + path + " for writing");
    save_weights(net, out);
}

Network load_weights(std::istream &in)
{
    std::array<char, 4> magic{};
    if (!in.read(magic.data(), magic.size()) || magic != kMagic)
        throw Error(Errc::malformed, "not a weights file");
    const auto version = get_le<std::uint32_t>(in);
    if (version != kWeightsVersion)
        throw Error(Errc::malformed, "unsupported weights version " + std::to_string(version));
    const auto len = get_le<std::uint64_t>(in);
    if (len > (64u << 20))
        throw Error(Errc::malformed, "weights header too large");
    std::string text(len, '\0');
    if (!in.read(text.data(), static_cast<std::streamsize>(len)))
        throw Error(Errc::malformed, "weights file truncated");

    nlohmann::json header;
    try {
        header = nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception &e) {
        throw Error(Errc::malformed, std::string("bad weights header: ") + e.what());
    }
    Network net(NetConfig::from_json(header.value("net", nlohmann::json::object())));
    const auto &tensors = net.tensors();
    try {
        const auto &list = header.at("tensors");
        if (list.size() != tensors.size())
            throw Error(Errc::malformed, "tensor count mismatch");
        for (std::size_t i = 0; i < tensors.size(); ++i) {
            const auto &t = list[i];
            if (t.at("name").get<std::string>() != tensors[i].name ||
                t.at("shape").get<std::vector<int>>() != tensors[i].shape ||
                t.at("offset").get<std::size_t>() != tensors[i].offset ||
                t.at("count").get<std::size_t>() != tensors[i].count)
                throw Error(Errc::malformed, "tensor " + tensors[i].name + " does not match the network layout");
        }
    } catch (const nlohmann::json::exception &e) {
        throw Error(Errc::malformed, std::string("bad tensor table: ") + e.what());
    }
    for (double &v : net.parameters())
        v = static_cast<double>(std::bit_cast<float>(get_le<std::uint32_t>(in)));
    return net;
}

Network load_weights(const std::string &path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw Error(Errc::io, "cannot open " + path);
    return load_weights(in);
}

} // namespace sketchwatch::detector
