#pragma once

#include <string>
#include <string_view>

#include "hilfed/grid_model.hpp"

namespace hilfed {

struct GridParseOptions {
    bool require_radial = false;
};

/// Parses a network document.
///
/// Sections and record layouts (fields in this order, `#` comments allowed):
///
///     [system]      base_mva,<MVA>
///     [buses]       id,phases,base_kv,kind            kind: slack | pq | pv
///     [branches]    from,to,r11,x11[,r12,x12,...]     upper triangle, row-major, per-unit
///     [loads]       id,bus,phases,kind,p_kw,q_kvar[,fixed]
///     [shunts]      id,bus,phases,kvar_per_block,blocks,initial_on
///     [generators]  bus,p_mw,v_set,q_min_mvar,q_max_mvar   p_mw empty on the slack bus
///     [solar]       id,bus,s_kva,profile_id
///
/// Load kinds are `constant_power`, `constant_current` and `constant_impedance`.
/// Throws ParseError for lexical problems and ModelError for invariant violations.
GridModel parse_grid_file(std::string_view text, const GridParseOptions& options = {});

GridModel load_grid_file(const std::string& path, const GridParseOptions& options = {});

/// Canonical text for `model`; parse_grid_file(to_text(m)) == m.
std::string to_text(const GridModel& model);

std::string_view to_string(LoadKind kind);
std::string_view to_string(BusKind kind);

}  // namespace hilfed
