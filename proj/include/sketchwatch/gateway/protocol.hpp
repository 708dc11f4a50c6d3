// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

namespace sketchwatch::gateway {

inline constexpr int kProtocolVersion = 1;

enum class MessageType {
    Join,
    RoleAssign,
    StrokeAdd,
    Guess,
    Feedback,
    Alert,
    FalseAlarm,
    ViolationFlag,
    GameEnd,
    Error,
};

std::string_view to_string(MessageType t);
/// Throws Error(unknown_type).
MessageType message_type_from_string(std::string_view s);
/// Types only the server sends.
bool server_only(MessageType t);

/// {type, session_id, seq, payload}. Join carries {"v": 1} in its payload.
struct WireMessage {
    MessageType type = MessageType::Error;
    std::string session_id;
    std::uint64_t seq = 0;
    nlohmann::json payload = nlohmann::json::object();

    nlohmann::json to_json() const;
    std::string dump() const { return to_json().dump(); }
};

/// Throws Error(malformed) or Error(unknown_type).
WireMessage parse_message(const nlohmann::json &j);
WireMessage parse_message(std::string_view text);

WireMessage error_message(std::string_view code, std::string_view text, std::optional<std::uint64_t> ref_seq = {});

/// 4-byte big-endian length, then that many bytes of UTF-8 JSON.
std::string encode_frame(std::string_view body);

/// Incremental decoder for a byte stream of frames.
class FrameDecoder {
public:
    explicit FrameDecoder(std::size_t max_frame = 1 << 20) : max_frame_(max_frame) {}

    /// Appends bytes and returns every frame completed by them. Throws
    /// Error(malformed) when a header announces more than max_frame bytes; the
    /// stream cannot be resynchronised after that.
    std::vector<std::string> feed(std::string_view bytes);
    std::size_t buffered() const { return buf_.size(); }

private:
    std::size_t max_frame_;
    std::string buf_;
};

} // namespace sketchwatch::gateway
