#ifndef CUSPWAVE_VERSION_HPP
#define CUSPWAVE_VERSION_HPP

namespace cuspwave {

inline constexpr const char* version_string = "0.1.0";

}

#endif
