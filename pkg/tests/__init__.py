# テストパッケージ初期化ファイル