#pragma once

#include <string_view>

#include <boost/regex.hpp>

#include "skillscan/common.hpp"

namespace skillscan::detail {

/// Calls fn(Span) for every non-empty match of `re` in `text`.
template <typename Fn>
void for_each_match(std::string_view text, const boost::regex& re, Fn&& fn) {
    boost::cregex_iterator it(text.data(), text.data() + text.size(), re);
    for (; it != boost::cregex_iterator(); ++it) {
        const auto& m = *it;
        if (m.length() == 0) continue;
        const auto start = static_cast<std::size_t>(m.position());
        fn(Span{start, start + static_cast<std::size_t>(m.length())});
    }
}

inline bool search(std::string_view text, const boost::regex& re) {
    return boost::regex_search(text.data(), text.data() + text.size(), re);
}

}  // namespace skillscan::detail
