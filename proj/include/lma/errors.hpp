// Copyright (C) 2026 the LMA engine authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <stdexcept>
#include <string>

namespace lma {

/// Shape or dimension disagreement between tensors.
class shape_error : public std::runtime_error {
public:
    explicit shape_error(const std::string& what) : std::runtime_error(what) {}
};

/// Out-of-range class label or element index.
class index_error : public std::runtime_error {
public:
    explicit index_error(const std::string& what) : std::runtime_error(what) {}
};

/// An API precondition was violated by the caller.
class contract_error : public std::logic_error {
public:
    explicit contract_error(const std::string& what) : std::logic_error(what) {}
};

/// Invalid or inconsistent configuration value.
class config_error : public std::runtime_error {
public:
    explicit config_error(const std::string& what) : std::runtime_error(what) {}
};

/// Malformed input file. Carries the byte offset of the defect.
class format_error : public std::runtime_error {
public:
    format_error(const std::string& what, std::size_t byte_offset)
        : std::runtime_error(what + " (at byte " + std::to_string(byte_offset) + ")"),
          offset_(byte_offset) {}
    std::size_t byte_offset() const { return offset_; }

private:
    std::size_t offset_;
};

/// A structural invariant of a state object does not hold.
class invariant_error : public std::runtime_error {
public:
    explicit invariant_error(const std::string& what) : std::runtime_error(what) {}
};

/// Operation asked of a model it cannot support (e.g. region counting on
/// a non-piecewise-linear activation).
class unsupported_error : public std::runtime_error {
public:
    explicit unsupported_error(const std::string& what) : std::runtime_error(what) {}
};

/// Training diverged (non-finite loss). Reported, never swallowed.
class training_failure : public std::runtime_error {
public:
    training_failure(const std::string& what, int epoch, double loss)
        : std::runtime_error(what), epoch_(epoch), loss_(loss) {}
    int epoch() const { return epoch_; }
    double loss() const { return loss_; }

private:
    int epoch_;
    double loss_;
};

} // namespace lma
