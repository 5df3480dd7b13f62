#pragma once

#include <functional>
#include <string>
#include <vector>

#include "doctest.h"
#include "msdrec/error.hpp"
#include "msdrec/types.hpp"

namespace fixture {

inline msdrec::TrackRecord track(std::string id, std::string artist, std::vector<std::string> similar = {},
                                 std::vector<std::string> terms = {}) {
    msdrec::TrackRecord t;
    t.track_id = std::move(id);
    t.artist_id = std::move(artist);
    t.similar_artists = std::move(similar);
    t.artist_terms = std::move(terms);
    return t;
}

/// Returns the error kind thrown by fn, failing the test if nothing is thrown.
inline std::optional<msdrec::ErrorKind> error_of(const std::function<void()>& fn) {
    try {
        fn();
    } catch (const msdrec::Error& e) {
        return e.kind();
    }
    return std::nullopt;
}

}  // namespace fixture

#define CHECK_ERROR(expr, expected_kind) \
    CHECK(fixture::error_of([&] { (void)(expr); }) == std::optional<msdrec::ErrorKind>(expected_kind))
