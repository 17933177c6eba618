from animlayout.cli import main

raise SystemExit(main())
