#pragma once

#include "ridgecond/error.hpp"
#include "ridgecond/sym_matrix.hpp"
#include "ridgecond/spectra.hpp"
#include "ridgecond/estimators.hpp"
#include "ridgecond/condpath.hpp"
#include "ridgecond/ingest.hpp"
#include "ridgecond/selection.hpp"
