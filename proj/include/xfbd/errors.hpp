#pragma once

#include <stdexcept>
#include <string>

namespace xfbd {

struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct MalformedWkt : Error {
    using Error::Error;
};
struct UnsupportedGeometry : Error {
    using Error::Error;
};
struct DimensionMismatch : Error {
    using Error::Error;
};
struct EmptyPolygon : Error {
    using Error::Error;
};
struct RegionTouchesBorder : Error {
    using Error::Error;
};
struct MissingFile : Error {
    using Error::Error;
};
struct BadJson : Error {
    using Error::Error;
};
struct SceneMismatch : Error {
    using Error::Error;
};
struct MissingSecondaryPre : Error {
    using Error::Error;
};
struct UnpairedFile : Error {
    using Error::Error;
};
struct IoError : Error {
    using Error::Error;
};

}  // namespace xfbd
