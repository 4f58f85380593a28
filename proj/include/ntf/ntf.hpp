#pragma once

#include "ntf/analysis.hpp"
#include "ntf/corcondia.hpp"
#include "ntf/cp_als.hpp"
#include "ntf/ingest.hpp"
#include "ntf/nnls.hpp"
#include "ntf/serialize.hpp"
#include "ntf/synthetic.hpp"
#include "ntf/synthetic_ledger.hpp"
#include "ntf/tensor.hpp"
#include "ntf/tensor_io.hpp"
