# Experimental sequences: ramps, snapshots, quenches, Friedel runs