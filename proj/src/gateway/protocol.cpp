// SPDX-License-Identifier: Apache-2.0
#include "sketchwatch/gateway/protocol.hpp"

#include "sketchwatch/common/error.hpp"

#include <array>

namespace sketchwatch::gateway {

namespace {

constexpr std::array<std::pair<MessageType, std::string_view>, 10> kNames{{
    {MessageType::Join, "Join"},
    {MessageType::RoleAssign, "RoleAssign"},
    {MessageType::StrokeAdd, "StrokeAdd"},
    {MessageType::Guess, "Guess"},
    {MessageType::Feedback, "Feedback"},
    {MessageType::Alert, "Alert"},
    {MessageType::FalseAlarm, "FalseAlarm"},
    {MessageType::ViolationFlag, "ViolationFlag"},
    {MessageType::GameEnd, "GameEnd"},
    {MessageType::Error, "Error"},
}};

} // namespace

std::string_view to_string(MessageType t)
{
    for (const auto &[k, v] : kNames)
        if (k == t)
            return v;
    return "Error";
}

MessageType message_type_from_string(std::string_view s)
{
    for (const auto &[k, v] : kNames)
        if (v == s)
            return k;
    throw Error(Errc::unknown_type, "unknown message type '" + std::string(s.substr(0, 64)) + "'");
}

bool server_only(MessageType t)
{
    return t == MessageType::RoleAssign || t == MessageType::Alert || t == MessageType::GameEnd ||
           t == MessageType::Error;
}

nlohmann::json WireMessage::to_json() const
{
    nlohmann::json j{{"type", to_string(type)}, {"seq", seq}, {"payload", payload}};
    if (!session_id.empty())
        j["session_id"] = session_id;
    return j;
}

WireMessage parse_message(const nlohmann::json &j)
{
    if (!j.is_object())
        throw Error(Errc::malformed, "message must be a JSON object");
    const auto type = j.find("type");
    if (type == j.end() || !type->is_string())
        throw Error(Errc::malformed, "message needs a string 'type'");
    WireMessage m;
    m.type = message_type_from_string(type->get_ref<const std::string &>());
    const auto seq = j.find("seq");
    if (seq == j.end() || !seq->is_number_unsigned())
        throw Error(Errc::malformed, "message needs a non-negative integer 'seq'");
    m.seq = seq->get<std::uint64_t>();
    if (const auto sid = j.find("session_id"); sid != j.end() && !sid->is_null()) {
        if (!sid->is_string())
            throw Error(Errc::malformed, "'session_id' must be a string");
        m.session_id = sid->get<std::string>();
    }
    if (const auto p = j.find("payload"); p != j.end() && !p->is_null()) {
        if (!p->is_object())
            throw Error(Errc::malformed, "'payload' must be an object");
        m.payload = *p;
    }
    return m;
}

WireMessage parse_message(std::string_view text)
{
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception &) {
        throw Error(Errc::malformed, "message is not valid JSON");
    }
    return parse_message(j);
}

WireMessage error_message(std::string_view code, std::string_view text, std::optional<std::uint64_t> ref_seq)
{
    WireMessage m;
    m.type = MessageType::Error;
    m.payload = {{"code", code}, {"message", text}};
    if (ref_seq)
        m.payload["ref_seq"] = *ref_seq;
    return m;
}

std::string encode_frame(std::string_view body)
{
    const auto n = static_cast<std::uint32_t>(body.size());
    std::string out;
    out.reserve(body.size() + 4);
    out.push_back(static_cast<char>((n >> 24) & 0xff));
    out.push_back(static_cast<char>((n >> 16) & 0xff));
    out.push_back(static_cast<char>((n >> 8) & 0xff));
    out.push_back(static_cast<char>(n & 0xff));
    out.append(body);
    return out;
}

std::vector<std::string> FrameDecoder::feed(std::string_view bytes)
{
    buf_.append(bytes);
    std::vector<std::string> out;
    std::size_t pos = 0;
    while (buf_.size() - pos >= 4) {
        const auto *p = reinterpret_cast<const unsigned char *>(buf_.data() + pos);
        const std::size_t n = (std::size_t{p[0]} << 24) | (std::size_t{p[1]} << 16) | (std::size_t{p[2]} << 8) | p[3];
        if (n > max_frame_) {
            buf_.clear();
            throw Error(Errc::malformed, "frame of " + std::to_string(n) + " bytes exceeds the limit");
        }
        if (buf_.size() - pos - 4 < n)
            break;
        out.emplace_back(buf_.substr(pos + 4, n));
        pos += 4 + n;
    }
    buf_.erase(0, pos);
    return out;
}

} // namespace sketchwatch::gateway
