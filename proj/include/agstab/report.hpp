#pragma once

#include <json.hpp>

#include <span>
#include <string>

#include "agstab/mc.hpp"
#include "agstab/synth.hpp"

namespace agstab {

nlohmann::ordered_json certificate_result_json(
    const CertificateResult& res, std::span<const std::string> names);
nlohmann::ordered_json sim_report_json(const SimReport& rep);

/// Write-then-rename so a report path never holds a partial document.
void write_text_atomic(const std::string& path, const std::string& text);

}  // namespace agstab
