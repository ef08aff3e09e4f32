#pragma once

#include "motionrocket/augment.hpp"
#include "motionrocket/dataset.hpp"
#include "motionrocket/error.hpp"
#include "motionrocket/eval.hpp"
#include "motionrocket/latency.hpp"
#include "motionrocket/minirocket.hpp"
#include "motionrocket/model_io.hpp"
#include "motionrocket/osc.hpp"
#include "motionrocket/pipeline.hpp"
#include "motionrocket/report.hpp"
#include "motionrocket/ridge.hpp"
#include "motionrocket/serve.hpp"
#include "motionrocket/signal.hpp"
#include "motionrocket/synth.hpp"
