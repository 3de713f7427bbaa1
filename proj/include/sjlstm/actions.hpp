#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <string_view>

namespace sjlstm {

enum class SkipAction : std::uint8_t { Skip = 0, Read = 1 };

enum class JumpAction : std::uint8_t { NextWord = 0, NextSubSep = 1, NextSentEnd = 2, EndOfText = 3 };

inline constexpr std::size_t kSkipActions = 2;
inline constexpr std::size_t kJumpActions = 4;

inline constexpr std::array<JumpAction, kJumpActions> kAllJumpActions{
    JumpAction::NextWord, JumpAction::NextSubSep, JumpAction::NextSentEnd, JumpAction::EndOfText};

constexpr std::size_t index_of(SkipAction a) { return static_cast<std::size_t>(a); }
constexpr std::size_t index_of(JumpAction a) { return static_cast<std::size_t>(a); }

constexpr std::string_view name_of(JumpAction a) {
    switch (a) {
        case JumpAction::NextWord: return "next-word";
        case JumpAction::NextSubSep: return "next-subsep";
        case JumpAction::NextSentEnd: return "next-sentend";
        case JumpAction::EndOfText: return "end-of-text";
    }
    return "?";
}

}  // namespace sjlstm
