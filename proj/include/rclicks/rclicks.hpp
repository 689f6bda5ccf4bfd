#pragma once

#include "rclicks/adapter.hpp"
#include "rclicks/click.hpp"
#include "rclicks/click_sim.hpp"
#include "rclicks/collect.hpp"
#include "rclicks/dataset.hpp"
#include "rclicks/error.hpp"
#include "rclicks/harness.hpp"
#include "rclicks/image_io.hpp"
#include "rclicks/imaging.hpp"
#include "rclicks/metrics.hpp"
#include "rclicks/probability_map.hpp"
#include "rclicks/report.hpp"
#include "rclicks/rle.hpp"
#include "rclicks/rng.hpp"
#include "rclicks/segmenter.hpp"
#include "rclicks/transport.hpp"
#include "rclicks/version.hpp"
