#ifndef TERRAPERM_CLASSES_H_
#define TERRAPERM_CLASSES_H_

#include <array>
#include <cstddef>
#include <cstdint>
#include <string_view>

namespace terraperm {

// Serialized codes are fixed.
enum class ClassCode : std::uint8_t { kRemainder = 0, kStructure = 1, kRoad = 2, kWater = 3 };

inline constexpr std::size_t kClassCount = 4;
inline constexpr std::array<ClassCode, kClassCount> kAllClasses = {
    ClassCode::kRemainder, ClassCode::kStructure, ClassCode::kRoad, ClassCode::kWater};

constexpr int code_of(ClassCode c) { return static_cast<int>(c); }

std::string_view to_string(ClassCode c);
// Accepts a class name ("remainder", "structure", "road", "water",
// case-insensitive) or its numeric code.
ClassCode parse_class(std::string_view text);
// Throws InvalidArgument outside [0, 4).
ClassCode class_from_code(int code);

}  // namespace terraperm

#endif  // TERRAPERM_CLASSES_H_
