#pragma once

#include "gridhop/geom.hpp"

#include <iosfwd>
#include <string>

namespace gridhop {

struct ObjHeader {
    std::string scene;
    std::string method;
    int n = 0;
};

/// Vertices shared by quantized position, shortest round-trip coordinates, 1-based faces.
void write_obj(std::ostream& out, const Mesh& mesh, const ObjHeader& header);

}  // namespace gridhop
