#ifndef RECTIDIC_VERSION_HPP
#define RECTIDIC_VERSION_HPP

namespace rectidic {

inline constexpr const char* kVersion = "1.0.0";
inline constexpr const char* kSoftwareId = "rectidic 1.0.0";

} // namespace rectidic

#endif
