#pragma once

#include <string>

#include "hts/io.hpp"

namespace fixtures {

inline std::string path(const std::string& name) { return std::string(HTS_DATA_DIR) + "/" + name; }

inline hts::Surface torus() { return hts::load_surface(path("torus.surf")); }
inline hts::Surface l3() { return hts::load_surface(path("l3.surf")); }
inline hts::Surface octagon() { return hts::load_surface(path("octagon.surf")); }
inline hts::Surface pillow6() { return hts::load_surface(path("pillow6.surf")); }

}  // namespace fixtures
