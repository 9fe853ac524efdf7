#include "wehrlflux/errors.hpp"

#include <cmath>

namespace wehrlflux {

void require_finite(double value, const char* name) {
    if (!std::isfinite(value)) {
        throw InvalidArgument(std::string("parameter '") + name + "' must be finite");
    }
}

}  // namespace wehrlflux
