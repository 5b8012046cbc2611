#pragma once
// plain-text scene files: `dimension = d`, optional `box = lo1 hi1 ...`,
// then repeated [object] blocks with `shape = ...` and `interaction = ...`.
// parse errors carry the offending line number.

#include <cstdint>
#include <stdexcept>
#include <string>

#include "wlc/geometry.hpp"

namespace wlc {

class SceneParseError : public std::runtime_error {
  public:
    SceneParseError(int line, const std::string& what)
        : std::runtime_error("line " + std::to_string(line) + ": " + what),
          line_(line) {}
    int line() const { return line_; }

  private:
    int line_;
};

// throws SceneParseError on malformed input; the returned scene has been
// validated (unit normals, positive radii, consistent dimension)
Scene parse_scene(const std::string& text);

// full-precision rendering; parse_scene(render_scene(s)) == s
std::string render_scene(const Scene& scene);

Scene load_scene_file(const std::string& path);

// FNV-1a over the canonical rendering; equal scenes hash equal
std::uint64_t scene_hash(const Scene& scene);

} // namespace wlc
