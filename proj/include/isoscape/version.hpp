#ifndef ISOSCAPE_VERSION_HPP
#define ISOSCAPE_VERSION_HPP

namespace isoscape {

inline constexpr const char* artifact_version = "0.1.0";

}

#endif
