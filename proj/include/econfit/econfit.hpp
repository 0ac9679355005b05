#pragma once

// Umbrella header for the econfit library.

#include "econfit/csv.hpp"
#include "econfit/econometrics.hpp"
#include "econfit/error.hpp"
#include "econfit/fitness.hpp"
#include "econfit/growth_panel.hpp"
#include "econfit/hash.hpp"
#include "econfit/ingest.hpp"
#include "econfit/kernelmap.hpp"
#include "econfit/matrix.hpp"
#include "econfit/pipeline.hpp"
#include "econfit/random.hpp"
#include "econfit/rca.hpp"
#include "econfit/strings.hpp"
#include "econfit/synthetic.hpp"
