#pragma once

#include <biaslens/agreement.hpp>
#include <biaslens/core.hpp>
#include <biaslens/csv.hpp>
#include <biaslens/ingest.hpp>
#include <biaslens/local.hpp>
#include <biaslens/report.hpp>
#include <biaslens/representational.hpp>
#include <biaslens/stereotypical.hpp>
#include <biaslens/synth.hpp>
