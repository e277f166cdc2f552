#pragma once

#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <string>

namespace courtraster {

// Court geometry in feet. x runs along the 94 ft length, y across the 50 ft width.
inline constexpr double kCourtLength = 94.0;
inline constexpr double kCourtWidth = 50.0;
inline constexpr double kHoopNearX = 5.25;
inline constexpr double kHoopFarX = 88.75;
inline constexpr double kHoopY = 25.0;

inline constexpr int kFps = 25;
inline constexpr int kPlayFrames = 125;
inline constexpr int kPlayersPerTeam = 5;
inline constexpr int kNumClasses = 10;

// Entity slots inside a Play: offense roles 1..5, ball, defense roles 1..5.
inline constexpr int kNumSlots = 11;
inline constexpr int kBallSlot = 5;
constexpr int offense_slot(int role) { return role - 1; }
constexpr int defense_slot(int role) { return 5 + role; }

struct Vec2 {
    double x = 0.0;
    double y = 0.0;
};

struct Vec3 {
    double x = 0.0;
    double y = 0.0;
    double z = 0.0;

    Vec2 xy() const { return {x, y}; }
    bool operator==(const Vec3&) const = default;
};

inline double distance(Vec2 a, Vec2 b) { return std::hypot(a.x - b.x, a.y - b.y); }

inline constexpr Vec2 kAttackedHoop{kHoopFarX, kHoopY};

// Error hierarchy. Every failure that crosses a module boundary is one of these.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Violated precondition on shapes, channel counts, frame counts.
class ContractError : public Error {
public:
    using Error::Error;
};

class ParseError : public Error {
public:
    ParseError(std::size_t row, const std::string& what)
        : Error("row " + std::to_string(row) + ": " + what), row_(row) {}
    std::size_t row() const { return row_; }

private:
    std::size_t row_;
};

class ConfigError : public Error {
public:
    using Error::Error;
};

// Inconsistent content in otherwise well-formed data (e.g. duplicate roles).
class DataError : public Error {
public:
    using Error::Error;
};

class IoError : public Error {
public:
    using Error::Error;
};

}  // namespace courtraster
