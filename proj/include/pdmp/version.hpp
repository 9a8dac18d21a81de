#ifndef PDMP_VERSION_HPP
#define PDMP_VERSION_HPP

namespace pdmp {
inline constexpr const char* kVersion = "1.0.0";
}

#endif
