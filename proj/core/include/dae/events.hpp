#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "dae/nn.hpp"

namespace dae {

enum class ObjectKind { muon, electron, jet };

/// Fixed-length event encoding: up to max_muons muons, then max_electrons
/// electrons, then max_jets jets, each as (pT, eta, phi[, m]). Slots within a
/// category are ordered by decreasing pT; absent objects are all-zero.
struct EventLayout {
    int max_muons = 4;
    int max_electrons = 4;
    int max_jets = 10;
    int features_per_object = 4;

    int n_objects() const { return max_muons + max_electrons + max_jets; }
    int n_features() const { return n_objects() * features_per_object; }
    /// First slot index of a category.
    int first_slot(ObjectKind kind) const;
    int slot_count(ObjectKind kind) const;
    /// Column of feature `feature` (0 = pT, 1 = eta, 2 = phi, 3 = m) in slot `slot`.
    int column(int slot, int feature) const { return slot * features_per_object + feature; }
    std::vector<std::string> feature_names() const;

    /// Throws ConfigError unless counts are non-negative, at least one object
    /// slot exists and features_per_object is 3 or 4.
    void validate() const;

    bool operator==(const EventLayout&) const = default;
};

/// Events plus optional labels (0 = background, k >= 1 = anomaly class k).
struct Dataset {
    EventMatrix events;
    std::optional<std::vector<std::uint16_t>> labels;
    EventLayout layout;
    std::map<std::string, std::string> provenance;

    std::size_t size() const { return static_cast<std::size_t>(events.rows()); }
    bool has_labels() const { return labels.has_value(); }
    /// Copy of the selected rows (labels follow).
    Dataset rows(const std::vector<std::size_t>& indices) const;
    /// Throws ContractError when labels and events disagree in length or
    /// events do not have layout.n_features() columns.
    void validate() const;
};

/// Writes the EVT1 binary format:
///   bytes 0-3 "EVT1", u8 version = 1, u8 flags (bit0: labels present),
///   u16 reserved = 0, u32 n_events, u32 n_features,
///   n_events * n_features little-endian f32 row-major,
///   then n_events little-endian u16 labels when flagged.
void write_events(const std::filesystem::path& path, const Dataset& data);

/// Reads an EVT1 file. Throws FormatError (with byte offset) for a bad
/// magic, version, reserved field or truncated body and LayoutMismatchError
/// when n_features differs from `expected.n_features()`. Without an expected
/// layout the default 4-feature layout is tried, then the 3-feature one.
Dataset read_events(const std::filesystem::path& path, std::optional<EventLayout> expected = std::nullopt);

/// CSV with a header row of feature names and an optional trailing "label" column.
void write_events_csv(const std::filesystem::path& path, const Dataset& data);
Dataset read_events_csv(const std::filesystem::path& path, std::optional<EventLayout> expected = std::nullopt);

/// Dispatches on the file extension (.csv, anything else is EVT1).
Dataset load_events(const std::filesystem::path& path, std::optional<EventLayout> expected = std::nullopt);

}  // namespace dae
